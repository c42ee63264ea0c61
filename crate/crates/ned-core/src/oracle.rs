//! Brute-force Gaussian kernel-density posterior and synthetic mixtures
//! with analytically known posteriors.
//!
//! This module is the correctness anchor for the exponential score: with a
//! shared isotropic kernel of variance `alpha = T/2`, the full-support
//! kernel posterior is algebraically identical to the score computed over
//! all N neighbors. The general forms (per-class alpha, per-class full
//! covariance) exist as reference computations only, deliberately O(N*M)
//! per query with no retrieval structure.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::rng::{stream_rng, Stream};
use crate::store::{SetRole, SupportSet};

/// Kernel used by the posterior estimate.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// One isotropic variance for every class; `alpha = T/2` reproduces
    /// the exponential score with k = N.
    SharedAlpha(f64),
    /// One isotropic variance per class (label-space order).
    PerClassAlpha(Vec<f64>),
    /// One full covariance matrix per class (label-space order).
    PerClassCovariance(Vec<DMatrix<f64>>),
}

/// Kernel-smoothed posterior over the full support set.
///
/// Per class j the unnormalized log-mass is
/// `log sum_{i: y_i = j} f_{Sigma_j}(z - z_i)` with `f` the zero-mean
/// Gaussian density; the class vector is normalized with log-sum-exp. The
/// empirical class prior N_j/N is implicit in the per-class sums.
pub fn kde_posterior(set: &SupportSet, query: &[f64], spec: &KernelSpec) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(NedError::EmptySet);
    }
    let m = set.dim();
    let classes = set.num_classes();
    if query.len() != m {
        return Err(NedError::QueryDimension {
            expected: m,
            got: query.len(),
        });
    }

    // Per-class (log det Sigma, quadratic-form evaluator).
    enum Kernel {
        Iso { alpha: f64 },
        Full { chol: Cholesky<f64, nalgebra::Dyn>, log_det: f64 },
    }
    let kernels: Vec<Kernel> = match spec {
        KernelSpec::SharedAlpha(alpha) => {
            require_positive(&[*alpha])?;
            vec![*alpha; classes]
                .into_iter()
                .map(|alpha| Kernel::Iso { alpha })
                .collect()
        }
        KernelSpec::PerClassAlpha(alphas) => {
            if alphas.len() != classes {
                return Err(NedError::config(format!(
                    "{} alphas for {} classes",
                    alphas.len(),
                    classes
                )));
            }
            require_positive(alphas)?;
            alphas.iter().map(|&alpha| Kernel::Iso { alpha }).collect()
        }
        KernelSpec::PerClassCovariance(covs) => {
            if covs.len() != classes {
                return Err(NedError::config(format!(
                    "{} covariance matrices for {} classes",
                    covs.len(),
                    classes
                )));
            }
            let mut kernels = Vec::with_capacity(classes);
            for (j, cov) in covs.iter().enumerate() {
                if cov.nrows() != m || cov.ncols() != m {
                    return Err(NedError::config(format!(
                        "covariance for class {j} is {}x{}, expected {m}x{m}",
                        cov.nrows(),
                        cov.ncols()
                    )));
                }
                let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
                    NedError::NotPositiveDefinite {
                        label: set.label_space().name(j).to_string(),
                    }
                })?;
                let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                kernels.push(Kernel::Full { chol, log_det });
            }
            kernels
        }
    };

    // Gather log kernel values per class, then log-sum-exp each class.
    let mut class_logs: Vec<Vec<f64>> = vec![Vec::new(); classes];
    let q = DVector::from_column_slice(query);
    for r in set.records() {
        let log_kernel = match &kernels[r.label] {
            Kernel::Iso { alpha } => {
                let d2: f64 = query
                    .iter()
                    .zip(&r.vector)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                -d2 / (2.0 * alpha) - 0.5 * (m as f64) * alpha.ln()
            }
            Kernel::Full { chol, log_det } => {
                let u = &q - DVector::from_column_slice(&r.vector);
                let x = chol.solve(&u);
                -0.5 * u.dot(&x) - 0.5 * log_det
            }
        };
        class_logs[r.label].push(log_kernel);
    }
    // The (2*pi)^(-m/2) factor is shared by every class and cancels.
    let log_mass: Vec<f64> = class_logs
        .iter()
        .map(|logs| log_sum_exp(logs))
        .collect();
    Ok(normalize_log(&log_mass))
}

fn require_positive(alphas: &[f64]) -> Result<()> {
    for &a in alphas {
        if !a.is_finite() || a <= 0.0 {
            return Err(NedError::config(format!(
                "kernel variance must be positive and finite, got {a}"
            )));
        }
    }
    Ok(())
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

fn normalize_log(log_mass: &[f64]) -> Vec<f64> {
    let max = log_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_mass.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / total).collect()
}

/// One Gaussian component of a synthetic mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    pub mean: Vec<f64>,
    /// Full covariance, row-major nested arrays.
    pub covariance: Vec<Vec<f64>>,
    pub prior: f64,
}

/// Gaussian mixture with known class-conditional densities; the ground
/// truth generator for benchmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dim: usize,
    pub seed: u64,
    pub classes: Vec<ClassSpec>,
}

impl MixtureSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<MixtureSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NedError::io(path, e))?;
        let spec: MixtureSpec = serde_json::from_str(&text)
            .map_err(|e| NedError::malformed(path, None, e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(NedError::config("mixture needs at least one class"));
        }
        let prior_sum: f64 = self.classes.iter().map(|c| c.prior).sum();
        if (prior_sum - 1.0).abs() > 1e-9 {
            return Err(NedError::config(format!(
                "priors sum to {prior_sum}, expected 1"
            )));
        }
        for c in &self.classes {
            if !c.prior.is_finite() || c.prior <= 0.0 {
                return Err(NedError::config(format!(
                    "class `{}` has non-positive prior",
                    c.label
                )));
            }
            if c.mean.len() != self.dim {
                return Err(NedError::config(format!(
                    "class `{}` mean has dimension {}, expected {}",
                    c.label,
                    c.mean.len(),
                    self.dim
                )));
            }
            self.cholesky_of(c)?;
        }
        Ok(())
    }

    fn cholesky_of(&self, class: &ClassSpec) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        if class.covariance.len() != self.dim
            || class.covariance.iter().any(|row| row.len() != self.dim)
        {
            return Err(NedError::config(format!(
                "class `{}` covariance is not {dim}x{dim}",
                class.label,
                dim = self.dim
            )));
        }
        let flat: Vec<f64> = class.covariance.iter().flatten().copied().collect();
        let matrix = DMatrix::from_row_slice(self.dim, self.dim, &flat);
        Cholesky::new(matrix).ok_or_else(|| NedError::NotPositiveDefinite {
            label: class.label.clone(),
        })
    }

    pub fn covariance_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.classes
            .iter()
            .map(|c| {
                let flat: Vec<f64> = c.covariance.iter().flatten().copied().collect();
                if flat.len() != self.dim * self.dim {
                    return Err(NedError::config(format!(
                        "class `{}` covariance is not square",
                        c.label
                    )));
                }
                Ok(DMatrix::from_row_slice(self.dim, self.dim, &flat))
            })
            .collect()
    }
}

/// Draws `n_per_class` points from every class (balanced sampling).
/// Deterministic: class j draws from its own RNG substream of `seed`.
pub fn generate_mixture(
    spec: &MixtureSpec,
    n_per_class: usize,
    seed: u64,
) -> Result<SupportSet> {
    let counts = vec![n_per_class; spec.classes.len()];
    generate_with_counts(spec, &counts, seed)
}

/// Draws `round(prior_j * n_total)` points per class, at least one each,
/// so empirical class frequencies match the spec priors.
pub fn generate_mixture_proportional(
    spec: &MixtureSpec,
    n_total: usize,
    seed: u64,
) -> Result<SupportSet> {
    let counts: Vec<usize> = spec
        .classes
        .iter()
        .map(|c| ((c.prior * n_total as f64).round() as usize).max(1))
        .collect();
    generate_with_counts(spec, &counts, seed)
}

fn generate_with_counts(spec: &MixtureSpec, counts: &[usize], seed: u64) -> Result<SupportSet> {
    spec.validate()?;
    let mut raw = Vec::new();
    for (j, class) in spec.classes.iter().enumerate() {
        let chol = spec.cholesky_of(class)?;
        let l = chol.l();
        let mean = DVector::from_column_slice(&class.mean);
        let mut rng = stream_rng(seed, Stream::Mixture, j as u64);
        for i in 0..counts[j] {
            let eps = DVector::from_fn(spec.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let z = &mean + &l * eps;
            raw.push((
                format!("{}-{i}", class.label),
                class.label.clone(),
                z.iter().copied().collect::<Vec<f64>>(),
            ));
        }
    }
    let space = crate::store::LabelSpace::from_labels(spec.classes.iter().map(|c| c.label.clone()));
    SupportSet::from_raw(raw, Some(space), SetRole::Support)
}

/// Exact Bayes posterior of the mixture at `z`, in label-sorted class
/// order (matching the label space of sets generated from the spec).
pub fn true_posterior(spec: &MixtureSpec, query: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if query.len() != spec.dim {
        return Err(NedError::QueryDimension {
            expected: spec.dim,
            got: query.len(),
        });
    }
    let mut order: Vec<usize> = (0..spec.classes.len()).collect();
    order.sort_by(|&a, &b| spec.classes[a].label.cmp(&spec.classes[b].label));

    let q = DVector::from_column_slice(query);
    let log_mass: Vec<f64> = order
        .iter()
        .map(|&j| {
            let class = &spec.classes[j];
            let chol = self_chol(spec, class);
            let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let u = &q - DVector::from_column_slice(&class.mean);
            let x = chol.solve(&u);
            class.prior.ln() - 0.5 * (u.dot(&x) + log_det)
        })
        .collect();
    Ok(normalize_log(&log_mass))
}

fn self_chol(spec: &MixtureSpec, class: &ClassSpec) -> Cholesky<f64, nalgebra::Dyn> {
    // validate() has already run; the factorization cannot fail here.
    spec.cholesky_of(class).expect("validated covariance")
}
