//! Robustness and sensitivity experiments: embedding-space perturbations
//! at graded severities, k-sweeps, and end-to-end evaluation runs.
//!
//! Perturbations act on query vectors only — the support set is never
//! altered — and each query draws from its own RNG substream, so results
//! are independent of evaluation order and thread count.

use serde::{Deserialize, Serialize};

use crate::calibration::{self, CalibrationReport, EvalOutcome};
use crate::error::{NedError, Result};
use crate::index::{Metric, VectorIndex};
use crate::rng::{stream_rng, Stream};
use crate::scorer::{predict_batch, Prediction, ScoreRule, ScorerConfig};
use crate::store::SupportSet;
use crate::tuner::{tune_temperature, TuneConfig};

/// Severity 1..=5 maps to this fraction of the query set's mean
/// nearest-neighbor distance (noise kinds) or of the coordinate count
/// (dropout).
pub const SEVERITY_SCALES: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbKind {
    /// i.i.d. zero-mean Gaussian noise of the severity scale per
    /// coordinate.
    Gaussian,
    /// i.i.d. uniform noise on `[-s, s]` per coordinate.
    Uniform,
    /// Zeroes a severity-proportional fraction of coordinates.
    Dropout,
}

impl std::str::FromStr for PerturbKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(PerturbKind::Gaussian),
            "uniform" => Ok(PerturbKind::Uniform),
            "dropout" => Ok(PerturbKind::Dropout),
            other => Err(format!(
                "unknown perturbation `{other}` (gaussian|uniform|dropout)"
            )),
        }
    }
}

impl std::fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerturbKind::Gaussian => "gaussian",
            PerturbKind::Uniform => "uniform",
            PerturbKind::Dropout => "dropout",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    /// 1 (mildest) to 5 (harshest).
    pub severity: u8,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn new(kind: PerturbKind, severity: u8, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&severity) {
            return Err(NedError::config(format!(
                "severity must be 1..=5, got {severity}"
            )));
        }
        Ok(PerturbSpec {
            kind,
            severity,
            seed,
        })
    }
}

/// Mean leave-one-out nearest-neighbor Euclidean distance within a query
/// set; the length scale severities are expressed in.
pub fn mean_nn_euclidean(queries: &[Vec<f64>]) -> f64 {
    if queries.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, q) in queries.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, other) in queries.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2: f64 = q
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d2);
        }
        total += best.sqrt();
    }
    total / queries.len() as f64
}

/// Applies the perturbation, returning new vectors; the input is never
/// mutated. Deterministic: query i draws from substream i of the spec
/// seed regardless of evaluation order.
pub fn perturb(queries: &[Vec<f64>], spec: &PerturbSpec) -> Result<Vec<Vec<f64>>> {
    PerturbSpec::new(spec.kind, spec.severity, spec.seed)?;
    let base = SEVERITY_SCALES[spec.severity as usize - 1];
    let scale = match spec.kind {
        PerturbKind::Dropout => base,
        _ => base * mean_nn_euclidean(queries),
    };
    Ok(perturb_scaled(queries, spec.kind, scale, spec.seed))
}

/// [`perturb`] with an explicit scale (noise amplitude, or dropout
/// fraction of coordinates). A scale of zero is the identity.
pub fn perturb_scaled(
    queries: &[Vec<f64>],
    kind: PerturbKind,
    scale: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut rng = stream_rng(seed, Stream::Perturb, i as u64);
            let mut out = q.clone();
            match kind {
                PerturbKind::Gaussian => {
                    for v in &mut out {
                        *v += scale * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                PerturbKind::Uniform => {
                    for v in &mut out {
                        *v += scale * (rng.gen::<f64>() * 2.0 - 1.0);
                    }
                }
                PerturbKind::Dropout => {
                    let drop = ((scale * out.len() as f64).round() as usize).min(out.len());
                    let mut coords: Vec<usize> = (0..out.len()).collect();
                    coords.shuffle(&mut rng);
                    for &c in coords.iter().take(drop) {
                        out[c] = 0.0;
                    }
                }
            }
            out
        })
        .collect()
}

/// One row of a sweep report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rule: ScoreRule,
    pub k: usize,
    /// Present for severity sweeps only.
    pub severity: Option<u8>,
    pub accuracy: f64,
    /// Absent for the 1-NN rule, whose confidence is a placeholder.
    pub ece: Option<f64>,
    /// Temperature the row was scored with (exponential rule only).
    pub t_used: Option<f64>,
}

/// Sweep results plus the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dataset: String,
    pub metric: Metric,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Machine-readable CSV; column set is fixed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rule,k,severity,accuracy,ece,t_used,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.rule,
                r.k,
                r.severity.map(|s| s.to_string()).unwrap_or_default(),
                r.accuracy,
                r.ece.map(|e| e.to_string()).unwrap_or_default(),
                r.t_used.map(|t| t.to_string()).unwrap_or_default(),
                self.seed
            ));
        }
        out
    }

    /// Aligned human-readable table; per-rule averages are appended for
    /// severity sweeps.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>6} {:>9} {:>10} {:>10} {:>12}\n",
            "rule", "k", "severity", "accuracy", "ece", "t_used"
        ));
        let fmt_row = |rule: &str, k: &str, sev: &str, acc: f64, ece: Option<f64>, t: Option<f64>| {
            format!(
                "{:<8} {:>6} {:>9} {:>10.4} {:>10} {:>12}\n",
                rule,
                k,
                sev,
                acc,
                ece.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
                t.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into()),
            )
        };
        for r in &self.rows {
            out.push_str(&fmt_row(
                &r.rule.to_string(),
                &r.k.to_string(),
                &r.severity.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                r.accuracy,
                r.ece,
                r.t_used,
            ));
        }
        if self.rows.iter().any(|r| r.severity.is_some()) {
            out.push('\n');
            for rule in ScoreRule::ALL {
                let rows: Vec<&SweepRow> =
                    self.rows.iter().filter(|r| r.rule == rule).collect();
                if rows.is_empty() {
                    continue;
                }
                let acc = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
                let eces: Vec<f64> = rows.iter().filter_map(|r| r.ece).collect();
                let ece = if eces.is_empty() {
                    None
                } else {
                    Some(eces.iter().sum::<f64>() / eces.len() as f64)
                };
                out.push_str(&fmt_row(&rule.to_string(), "-", "avg", acc, ece, None));
            }
        }
        out
    }
}

/// End-to-end evaluation of one scorer configuration: predictions plus
/// accuracy/ECE/bins against the true labels.
pub fn evaluate_run(
    support: &SupportSet,
    queries: &[Vec<f64>],
    truth: &[usize],
    config: &ScorerConfig,
    num_bins: usize,
) -> Result<(CalibrationReport, Vec<Prediction>)> {
    if queries.len() != truth.len() {
        return Err(NedError::config(format!(
            "{} queries but {} truth labels",
            queries.len(),
            truth.len()
        )));
    }
    if let Some(&bad) = truth.iter().find(|&&t| t >= support.num_classes()) {
        return Err(NedError::LabelSpaceMismatch {
            detail: format!(
                "truth label index {bad} outside the {}-class support label space",
                support.num_classes()
            ),
        });
    }
    let index = VectorIndex::build(support, config.metric)?;
    let predictions = predict_batch(&index, queries, config)?;
    let outcomes: Vec<EvalOutcome> = predictions
        .iter()
        .zip(truth)
        .map(|(p, &actual)| EvalOutcome {
            confidence: p.confidence,
            predicted: p.label,
            actual,
        })
        .collect();
    let calibrated = config.rule != ScoreRule::OneNn;
    let report = calibration::report(&outcomes, num_bins, calibrated)?;
    Ok((report, predictions))
}

/// Accuracy and ECE per (rule, k). The exponential rule retunes its
/// temperature at every k unless `fixed_t` is given.
#[allow(clippy::too_many_arguments)]
pub fn sweep_k(
    support: &SupportSet,
    queries: &[Vec<f64>],
    truth: &[usize],
    rules: &[ScoreRule],
    k_values: &[usize],
    metric: Metric,
    tune: &TuneConfig,
    fixed_t: Option<f64>,
    num_bins: usize,
    seed: u64,
    dataset: &str,
) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for &k in k_values {
        if k > support.len() {
            return Err(NedError::NeighborCount {
                k,
                available: support.len(),
            });
        }
        let needs_tuning = fixed_t.is_none() && rules.contains(&ScoreRule::Ned);
        let t = match (fixed_t, needs_tuning) {
            (Some(t), _) => t,
            (None, true) => {
                let config = TuneConfig { k, ..*tune };
                tune_temperature(support, &config, metric)?.t_star
            }
            (None, false) => 1.0,
        };
        for &rule in rules {
            let config = ScorerConfig::new(rule, k, t, metric)?;
            let (report, _) = evaluate_run(support, queries, truth, &config, num_bins)?;
            rows.push(SweepRow {
                rule,
                k: config.k,
                severity: None,
                accuracy: report.accuracy,
                ece: (rule != ScoreRule::OneNn).then_some(report.ece),
                t_used: (rule == ScoreRule::Ned).then_some(t),
            });
        }
    }
    Ok(SweepReport {
        dataset: dataset.to_string(),
        metric,
        seed,
        rows,
    })
}

/// Accuracy and ECE per (rule, severity) under one perturbation kind.
/// The temperature is the caller's (tuned on clean data); the support set
/// is never perturbed.
#[allow(clippy::too_many_arguments)]
pub fn sweep_severity(
    support: &SupportSet,
    queries: &[Vec<f64>],
    truth: &[usize],
    rules: &[ScoreRule],
    kind: PerturbKind,
    k: usize,
    metric: Metric,
    temperature: f64,
    num_bins: usize,
    seed: u64,
    dataset: &str,
) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for severity in 1..=5u8 {
        let spec = PerturbSpec::new(kind, severity, seed)?;
        let perturbed = perturb(queries, &spec)?;
        for &rule in rules {
            let config = ScorerConfig::new(rule, k, temperature, metric)?;
            let (report, _) = evaluate_run(support, &perturbed, truth, &config, num_bins)?;
            rows.push(SweepRow {
                rule,
                k: config.k,
                severity: Some(severity),
                accuracy: report.accuracy,
                ece: (rule != ScoreRule::OneNn).then_some(report.ece),
                t_used: (rule == ScoreRule::Ned).then_some(temperature),
            });
        }
    }
    Ok(SweepReport {
        dataset: dataset.to_string(),
        metric,
        seed,
        rows,
    })
}
