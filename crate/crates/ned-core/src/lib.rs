//! Calibrated confidence scoring for nearest-neighbor classification over
//! precomputed embeddings.
//!
//! The confidence score is a normalized sum of exponentials of squared
//! distances to the nearest support points, with a single temperature
//! parameter tuned by negative log-likelihood. Alongside it: plain and
//! distance-weighted k-NN baselines, calibration metrics (ECE, reliability
//! diagrams), a brute-force Gaussian kernel-density posterior used as a
//! correctness oracle, and a perturbation/sweep harness for robustness
//! experiments.
//!
//! With the default `parallel` feature, batch scoring and tuning fan out
//! over rayon; results are identical to sequential execution.

pub mod calibration;
pub mod error;
pub mod harness;
pub mod index;
pub mod oracle;
mod parallel;
pub mod rng;
pub mod scorer;
pub mod store;
pub mod tuner;

pub use error::{NedError, Result};
pub use index::{Metric, NeighborList, VectorIndex};
pub use scorer::{Prediction, ScoreRule, ScorerConfig};
pub use store::{EmbeddingRecord, FileFormat, LabelSpace, SetRole, SupportSet};
