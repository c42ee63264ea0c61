//! Per-class confidence scores and predictions for query embeddings.
//!
//! One retrieval step feeds five score rules: the exponential-of-distances
//! score (the method under study), plain k-NN vote fractions, two
//! linear-distance-weighted k-NN variants, and raw 1-NN. All rules except
//! 1-NN return a distribution over the support classes.

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::index::{Metric, NeighborList, VectorIndex};
use crate::parallel;

/// Score rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreRule {
    #[serde(rename = "ned")]
    Ned,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "wknn-a")]
    WknnA,
    #[serde(rename = "wknn-b")]
    WknnB,
    #[serde(rename = "1nn")]
    OneNn,
}

impl ScoreRule {
    pub const ALL: [ScoreRule; 5] = [
        ScoreRule::Ned,
        ScoreRule::Knn,
        ScoreRule::WknnA,
        ScoreRule::WknnB,
        ScoreRule::OneNn,
    ];
}

impl std::str::FromStr for ScoreRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ned" => Ok(ScoreRule::Ned),
            "knn" => Ok(ScoreRule::Knn),
            "wknn-a" => Ok(ScoreRule::WknnA),
            "wknn-b" => Ok(ScoreRule::WknnB),
            "1nn" => Ok(ScoreRule::OneNn),
            other => Err(format!(
                "unknown rule `{other}` (ned|knn|wknn-a|wknn-b|1nn)"
            )),
        }
    }
}

impl std::fmt::Display for ScoreRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreRule::Ned => "ned",
            ScoreRule::Knn => "knn",
            ScoreRule::WknnA => "wknn-a",
            ScoreRule::WknnB => "wknn-b",
            ScoreRule::OneNn => "1nn",
        })
    }
}

/// Weighting variant for the distance-weighted vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WknnVariant {
    /// `w_i = (d_k - d_i) / (d_k - d_1)`; the farthest neighbor gets
    /// weight zero.
    A,
    /// Same slope blended with a uniform floor of `1/k`, so the farthest
    /// neighbor keeps weight `1/(k+1)`.
    B,
}

/// Full scorer configuration for one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub rule: ScoreRule,
    pub k: usize,
    /// Temperature of the exponential score; ignored by the other rules.
    pub temperature: f64,
    pub metric: Metric,
}

impl ScorerConfig {
    /// Validates `k >= 1` and `temperature > 0`; a 1-NN rule forces `k = 1`.
    pub fn new(rule: ScoreRule, k: usize, temperature: f64, metric: Metric) -> Result<Self> {
        if k == 0 {
            return Err(NedError::config("k must be at least 1"));
        }
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(NedError::config(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        let k = if rule == ScoreRule::OneNn { 1 } else { k };
        Ok(ScorerConfig {
            rule,
            k,
            temperature,
            metric,
        })
    }
}

/// Predicted label with its confidence and the full per-class score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    pub confidence: f64,
    pub class_scores: Vec<f64>,
    /// False only for the 1-NN rule, whose reported confidence of 1.0 is
    /// a placeholder rather than a probability estimate.
    pub calibrated: bool,
}

/// Exponential-of-distances score: `score_j ∝ Σ_i exp(-d_i / T) [y_i = j]`,
/// normalized over classes.
///
/// Distances are shifted by the minimum before exponentiation, so the
/// nearest neighbor always contributes weight 1 and small temperatures
/// cannot underflow every term to zero. `labels[i]` is the class of
/// `neighbors.entries()[i]`.
pub fn ned_scores(
    neighbors: &NeighborList,
    labels: &[usize],
    temperature: f64,
    num_classes: usize,
) -> Vec<f64> {
    assert!(!neighbors.is_empty(), "ned_scores needs at least one neighbor");
    assert_eq!(neighbors.len(), labels.len());
    assert!(temperature > 0.0, "temperature must be positive");
    let d_min = neighbors.entries()[0].distance;
    let mut scores = vec![0.0; num_classes];
    let mut total = 0.0;
    for (n, &label) in neighbors.entries().iter().zip(labels) {
        let w = (-(n.distance - d_min) / temperature).exp();
        scores[label] += w;
        total += w;
    }
    for s in &mut scores {
        *s /= total;
    }
    scores
}

/// Vote fractions: `score_j = (1/k) Σ_i [y_i = j]`, computed as exact
/// count-over-k ratios.
pub fn knn_scores(labels: &[usize], num_classes: usize) -> Vec<f64> {
    assert!(!labels.is_empty(), "knn_scores needs at least one neighbor");
    let mut counts = vec![0usize; num_classes];
    for &label in labels {
        counts[label] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / labels.len() as f64)
        .collect()
}

/// Linearly distance-weighted vote fractions.
///
/// Weights use raw distances: under the squared-euclidean metric the
/// stored neighbor distances are square-rooted first. When all k distances
/// are equal both variants degenerate to uniform weights, i.e. plain vote
/// fractions.
pub fn wknn_scores(
    neighbors: &NeighborList,
    labels: &[usize],
    variant: WknnVariant,
    num_classes: usize,
    metric: Metric,
) -> Vec<f64> {
    assert!(!neighbors.is_empty(), "wknn_scores needs at least one neighbor");
    assert_eq!(neighbors.len(), labels.len());
    let raw: Vec<f64> = neighbors
        .entries()
        .iter()
        .map(|n| match metric {
            Metric::SquaredEuclidean => n.distance.sqrt(),
            Metric::Cosine => n.distance,
        })
        .collect();
    let k = raw.len();
    let (d_first, d_last) = (raw[0], raw[k - 1]);
    let spread = d_last - d_first;
    let weights: Vec<f64> = if spread > 0.0 {
        match variant {
            WknnVariant::A => raw.iter().map(|d| (d_last - d) / spread).collect(),
            WknnVariant::B => {
                let floor = spread / k as f64;
                let denom = (1.0 + 1.0 / k as f64) * spread;
                raw.iter().map(|d| ((d_last - d) + floor) / denom).collect()
            }
        }
    } else {
        vec![1.0; k]
    };
    let total: f64 = weights.iter().sum();
    let mut scores = vec![0.0; num_classes];
    for (&w, &label) in weights.iter().zip(labels) {
        scores[label] += w;
    }
    for s in &mut scores {
        *s /= total;
    }
    scores
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

/// Retrieves `config.k` neighbors and applies the configured score rule.
pub fn predict(index: &VectorIndex, query: &[f64], config: &ScorerConfig) -> Result<Prediction> {
    let neighbors = index.query_knn(query, config.k)?;
    let labels: Vec<usize> = neighbors
        .entries()
        .iter()
        .map(|n| index.label_of(n.index))
        .collect();
    let m = index.num_classes();
    let (class_scores, calibrated) = match config.rule {
        ScoreRule::Ned => (
            ned_scores(&neighbors, &labels, config.temperature, m),
            true,
        ),
        ScoreRule::Knn => (knn_scores(&labels, m), true),
        ScoreRule::WknnA => (
            wknn_scores(&neighbors, &labels, WknnVariant::A, m, config.metric),
            true,
        ),
        ScoreRule::WknnB => (
            wknn_scores(&neighbors, &labels, WknnVariant::B, m, config.metric),
            true,
        ),
        ScoreRule::OneNn => {
            let mut scores = vec![0.0; m];
            scores[labels[0]] = 1.0;
            (scores, false)
        }
    };
    let label = argmax_lowest(&class_scores);
    Ok(Prediction {
        label,
        confidence: class_scores[label],
        class_scores,
        calibrated,
    })
}

/// [`predict`] applied element-wise; order-preserving, and identical to
/// [`predict_batch_serial`] output whatever the thread count. The first
/// failing query (by position) aborts the batch.
pub fn predict_batch(
    index: &VectorIndex,
    queries: &[Vec<f64>],
    config: &ScorerConfig,
) -> Result<Vec<Prediction>> {
    let results = parallel::map_slice(queries, |q| predict(index, q, config));
    collect_batch(results)
}

/// Sequential fallback of [`predict_batch`]; also the benchmark baseline.
pub fn predict_batch_serial(
    index: &VectorIndex,
    queries: &[Vec<f64>],
    config: &ScorerConfig,
) -> Result<Vec<Prediction>> {
    let results = queries.iter().map(|q| predict(index, q, config)).collect();
    collect_batch(results)
}

fn collect_batch(results: Vec<Result<Prediction>>) -> Result<Vec<Prediction>> {
    results
        .into_iter()
        .enumerate()
        .map(|(position, r)| {
            r.map_err(|e| NedError::BatchQuery {
                position,
                source: Box::new(e),
            })
        })
        .collect()
}
