//! Temperature selection by negative log-likelihood.
//!
//! The objective is the mean negative log of the true-class score, either
//! leave-one-out on the support set (default) or on a stratified holdout.
//! Neighbor retrieval does not depend on the temperature, so the neighbor
//! lists are built once and reused for every evaluated T: a log-spaced
//! grid scan followed by golden-section refinement around the grid
//! minimum.

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::index::{Metric, NeighborList, VectorIndex};
use crate::parallel;
use crate::scorer::ned_scores;
use crate::store::SupportSet;

/// Floor applied to true-class scores before taking logs, so one
/// zero-probability point cannot produce an infinite objective.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// Which data the objective is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum TuneMode {
    /// Score every support point against the support set minus itself.
    #[serde(rename = "loo")]
    LeaveOneOut,
    /// Score a stratified holdout against the remaining records.
    Holdout { fraction: f64, seed: u64 },
}

/// Log-spaced temperature grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl TemperatureGrid {
    pub fn new(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        if !t_min.is_finite() || !t_max.is_finite() || t_min <= 0.0 || t_max <= t_min {
            return Err(NedError::config(format!(
                "grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if points < 8 {
            return Err(NedError::config("grid needs at least 8 points"));
        }
        Ok(TemperatureGrid {
            t_min,
            t_max,
            points,
        })
    }

    fn values(&self) -> Vec<f64> {
        let (lo, hi) = (self.t_min.ln(), self.t_max.ln());
        (0..self.points)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub mode: TuneMode,
    pub k: usize,
    /// `None` selects a data-adaptive grid spanning six decades around the
    /// mean nearest-neighbor distance of the tuning points.
    pub grid: Option<TemperatureGrid>,
    pub refine_iters: usize,
}

impl TuneConfig {
    pub fn new(k: usize) -> Self {
        TuneConfig {
            mode: TuneMode::LeaveOneOut,
            k,
            grid: None,
            refine_iters: 24,
        }
    }
}

/// Outcome of a tuning run. The curve holds every evaluated `(T, NLL)`
/// pair (grid and refinement), sorted by temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub t_star: f64,
    pub nll_at_t_star: f64,
    /// True when `t_star` landed strictly inside the searched bracket;
    /// false means the optimum sat on a grid endpoint.
    pub interior: bool,
    pub nll_curve: Vec<(f64, f64)>,
}

impl TuneResult {
    /// Two-column CSV of the evaluated curve.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("T,NLL\n");
        for (t, nll) in &self.nll_curve {
            out.push_str(&format!("{t},{nll}\n"));
        }
        out
    }
}

/// One tuning point: its neighbors, their labels, and the true class.
struct TunePoint {
    neighbors: NeighborList,
    labels: Vec<usize>,
    true_label: usize,
}

/// Neighbor lists for all tuning points; temperature-independent by
/// construction, computed once per tuning run.
struct Scaffold {
    points: Vec<TunePoint>,
    num_classes: usize,
}

impl Scaffold {
    fn nll(&self, temperature: f64) -> f64 {
        let losses = parallel::map_slice(&self.points, |p| {
            let scores = ned_scores(&p.neighbors, &p.labels, temperature, self.num_classes);
            -scores[p.true_label].max(PROBABILITY_CLAMP).ln()
        });
        losses.iter().sum::<f64>() / losses.len() as f64
    }

    fn nll_serial(&self, temperature: f64) -> f64 {
        let mut sum = 0.0;
        for p in &self.points {
            let scores = ned_scores(&p.neighbors, &p.labels, temperature, self.num_classes);
            sum += -scores[p.true_label].max(PROBABILITY_CLAMP).ln();
        }
        sum / self.points.len() as f64
    }

    /// Mean distance to the nearest neighbor over all tuning points; the
    /// scale anchor for the adaptive grid.
    fn mean_nn_distance(&self) -> f64 {
        let sum: f64 = self
            .points
            .iter()
            .map(|p| p.neighbors.entries()[0].distance)
            .sum();
        sum / self.points.len() as f64
    }
}

fn require_loo_preconditions(set: &SupportSet, k: usize) -> Result<()> {
    if set.len() < 2 {
        return Err(NedError::EmptySet);
    }
    for (class, &count) in set.class_counts().iter().enumerate() {
        if count < 2 {
            return Err(NedError::SingleRecordClass {
                label: set.label_space().name(class).to_string(),
            });
        }
    }
    if k > set.len() - 1 {
        return Err(NedError::NeighborCount {
            k,
            available: set.len() - 1,
        });
    }
    Ok(())
}

/// Leave-one-out neighbor lists: point i's list is a k-NN query over the
/// support set with record i excluded. Indices refer to the full set.
fn loo_scaffold(set: &SupportSet, k: usize, metric: Metric) -> Result<Scaffold> {
    require_loo_preconditions(set, k)?;
    let index = VectorIndex::build(set, metric)?;
    let lists = parallel::map_range(set.len(), |i| -> Result<TunePoint> {
        // Query k+1 and drop the self match (distance 0 ties break toward
        // the lower record index, so self is not guaranteed to be first).
        let nn = index.query_knn(&set.records()[i].vector, k + 1)?;
        let keep: Vec<_> = nn
            .entries()
            .iter()
            .filter(|n| n.index != i)
            .take(k)
            .copied()
            .collect();
        let neighbors = NeighborList::from_sorted(keep);
        let labels = neighbors
            .entries()
            .iter()
            .map(|n| index.label_of(n.index))
            .collect();
        Ok(TunePoint {
            neighbors,
            labels,
            true_label: set.records()[i].label,
        })
    });
    let points = lists.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Scaffold {
        points,
        num_classes: set.num_classes(),
    })
}

fn holdout_scaffold(
    set: &SupportSet,
    k: usize,
    metric: Metric,
    fraction: f64,
    seed: u64,
) -> Result<Scaffold> {
    let (rest, held) = set.split_holdout(fraction, seed)?;
    if k > rest.len() {
        return Err(NedError::NeighborCount {
            k,
            available: rest.len(),
        });
    }
    let index = VectorIndex::build(&rest, metric)?;
    let lists = parallel::map_slice(held.records(), |r| -> Result<TunePoint> {
        let neighbors = index.query_knn(&r.vector, k)?;
        let labels = neighbors
            .entries()
            .iter()
            .map(|n| index.label_of(n.index))
            .collect();
        Ok(TunePoint {
            neighbors,
            labels,
            true_label: r.label,
        })
    });
    let points = lists.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Scaffold {
        points,
        num_classes: set.num_classes(),
    })
}

/// Leave-one-out negative log-likelihood of the true class under the
/// exponential score at the given temperature.
pub fn loo_nll(set: &SupportSet, k: usize, temperature: f64, metric: Metric) -> Result<f64> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(NedError::config("temperature must be positive"));
    }
    Ok(loo_scaffold(set, k, metric)?.nll(temperature))
}

/// Sequential twin of [`loo_nll`]; benchmark baseline and determinism
/// check.
pub fn loo_nll_serial(
    set: &SupportSet,
    k: usize,
    temperature: f64,
    metric: Metric,
) -> Result<f64> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(NedError::config("temperature must be positive"));
    }
    require_loo_preconditions(set, k)?;
    let index = VectorIndex::build(set, metric)?;
    let mut points = Vec::with_capacity(set.len());
    for (i, r) in set.records().iter().enumerate() {
        let nn = index.query_knn(&r.vector, k + 1)?;
        let keep: Vec<_> = nn
            .entries()
            .iter()
            .filter(|n| n.index != i)
            .take(k)
            .copied()
            .collect();
        let neighbors = NeighborList::from_sorted(keep);
        let labels = neighbors
            .entries()
            .iter()
            .map(|n| index.label_of(n.index))
            .collect();
        points.push(TunePoint {
            neighbors,
            labels,
            true_label: r.label,
        });
    }
    let scaffold = Scaffold {
        points,
        num_classes: set.num_classes(),
    };
    Ok(scaffold.nll_serial(temperature))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes the tuning objective over T: grid scan, then golden-section
/// refinement (in log-T) on the interval bracketing the grid minimum.
/// Ties prefer the lower temperature; the result never leaves the grid
/// range. Deterministic.
pub fn tune_temperature(
    set: &SupportSet,
    config: &TuneConfig,
    metric: Metric,
) -> Result<TuneResult> {
    let scaffold = match config.mode {
        TuneMode::LeaveOneOut => loo_scaffold(set, config.k, metric)?,
        TuneMode::Holdout { fraction, seed } => {
            holdout_scaffold(set, config.k, metric, fraction, seed)?
        }
    };
    let grid = match config.grid {
        Some(g) => g,
        None => {
            let scale = scaffold.mean_nn_distance();
            let scale = if scale > 0.0 { scale } else { 1.0 };
            TemperatureGrid::new(1e-3 * scale, 1e3 * scale, 32)?
        }
    };

    let ts = grid.values();
    let nlls = parallel::map_slice(&ts, |&t| scaffold.nll(t));
    let mut curve: Vec<(f64, f64)> = ts.iter().copied().zip(nlls.iter().copied()).collect();

    let mut best = 0;
    for (i, &nll) in nlls.iter().enumerate() {
        if nll < nlls[best] {
            best = i;
        }
    }

    // Golden-section refinement in log space on [grid[best-1], grid[best+1]].
    let lo = ts[best.saturating_sub(1)].ln();
    let hi = ts[(best + 1).min(ts.len() - 1)].ln();
    if hi > lo && config.refine_iters > 0 {
        let (mut a, mut b) = (lo, hi);
        let mut c = b - (b - a) * INV_PHI;
        let mut d = a + (b - a) * INV_PHI;
        let mut fc = scaffold.nll(c.exp());
        let mut fd = scaffold.nll(d.exp());
        curve.push((c.exp(), fc));
        curve.push((d.exp(), fd));
        for _ in 0..config.refine_iters {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * INV_PHI;
                fc = scaffold.nll(c.exp());
                curve.push((c.exp(), fc));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * INV_PHI;
                fd = scaffold.nll(d.exp());
                curve.push((d.exp(), fd));
            }
        }
    }

    curve.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut t_star, mut nll_star) = curve[0];
    for &(t, nll) in &curve[1..] {
        if nll < nll_star {
            t_star = t;
            nll_star = nll;
        }
    }
    Ok(TuneResult {
        t_star,
        nll_at_t_star: nll_star,
        interior: t_star > grid.t_min && t_star < grid.t_max,
        nll_curve: curve,
    })
}
