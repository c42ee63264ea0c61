//! Distance metrics and exact k-nearest-neighbor retrieval.
//!
//! Retrieval is an exhaustive scan; [`VectorIndex::query_knn`] selects the
//! top k with a partial selection, and [`VectorIndex::query_knn_reference`]
//! sorts the full distance list. Both return identical results (the
//! selection path is gated behind equality tests against the reference).
//! Ties on distance break toward the lower record index.

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::rng::{stream_rng, Stream};
use crate::store::SupportSet;

/// Distance in embedding space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `sum((a_i - b_i)^2)`; the default, and the one the calibration
    /// theory is derived for.
    #[serde(rename = "sqeuclidean")]
    SquaredEuclidean,
    /// `1 - <a,b> / (|a| |b|)`, in `[0, 2]`; undefined for zero vectors.
    Cosine,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::SquaredEuclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                1.0 - dot / (na.sqrt() * nb.sqrt())
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sqeuclidean" => Ok(Metric::SquaredEuclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric `{other}` (sqeuclidean|cosine)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::SquaredEuclidean => "sqeuclidean",
            Metric::Cosine => "cosine",
        })
    }
}

/// One retrieved neighbor: support-record index and distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Neighbors sorted ascending by `(distance, index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    entries: Vec<Neighbor>,
}

impl NeighborList {
    /// Wraps entries that are already sorted ascending by
    /// `(distance, index)` with distinct indices.
    pub fn from_sorted(entries: Vec<Neighbor>) -> NeighborList {
        debug_assert!(entries
            .windows(2)
            .all(|w| cmp_pair(&(w[0].distance, w[0].index), &(w[1].distance, w[1].index))
                .is_lt()));
        NeighborList { entries }
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mean neighbor distance; the reference scale for temperature limits.
    pub fn mean_distance(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|n| n.distance).sum::<f64>() / self.entries.len() as f64
    }
}

/// Immutable exact-retrieval index over a support set.
///
/// Vectors are flattened row-major at build time; labels and class count
/// are carried along so scoring needs no further access to the set.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    vectors: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    num_classes: usize,
    metric: Metric,
}

impl VectorIndex {
    pub fn build(set: &SupportSet, metric: Metric) -> Result<VectorIndex> {
        if set.is_empty() {
            return Err(NedError::EmptySet);
        }
        if metric == Metric::Cosine {
            for r in set.records() {
                if r.vector.iter().all(|&v| v == 0.0) {
                    return Err(NedError::ZeroVector { id: r.id.clone() });
                }
            }
        }
        let dim = set.dim();
        let mut vectors = Vec::with_capacity(set.len() * dim);
        let mut labels = Vec::with_capacity(set.len());
        for r in set.records() {
            vectors.extend_from_slice(&r.vector);
            labels.push(r.label);
        }
        Ok(VectorIndex {
            vectors,
            labels,
            dim,
            num_classes: set.num_classes(),
            metric,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_of(&self, record_index: usize) -> usize {
        self.labels[record_index]
    }

    pub fn vector_of(&self, record_index: usize) -> &[f64] {
        &self.vectors[record_index * self.dim..(record_index + 1) * self.dim]
    }

    fn distances(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(NedError::QueryDimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        if self.metric == Metric::Cosine && query.iter().all(|&v| v == 0.0) {
            return Err(NedError::ZeroVector {
                id: "<query>".to_string(),
            });
        }
        Ok((0..self.len())
            .map(|i| self.metric.distance(query, self.vector_of(i)))
            .collect())
    }

    /// The `min(k, N)` nearest support records, via partial selection.
    pub fn query_knn(&self, query: &[f64], k: usize) -> Result<NeighborList> {
        if k == 0 {
            return Err(NedError::config("k must be at least 1"));
        }
        let mut pairs: Vec<(f64, usize)> = self
            .distances(query)?
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        let k = k.min(pairs.len());
        if k < pairs.len() {
            pairs.select_nth_unstable_by(k - 1, cmp_pair);
            pairs.truncate(k);
        }
        pairs.sort_unstable_by(cmp_pair);
        Ok(NeighborList {
            entries: pairs
                .into_iter()
                .map(|(distance, index)| Neighbor { index, distance })
                .collect(),
        })
    }

    /// Reference retrieval: sort the full distance list. Slower than
    /// [`query_knn`](Self::query_knn) and kept as the normative oracle.
    pub fn query_knn_reference(&self, query: &[f64], k: usize) -> Result<NeighborList> {
        if k == 0 {
            return Err(NedError::config("k must be at least 1"));
        }
        let mut pairs: Vec<(f64, usize)> = self
            .distances(query)?
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        pairs.sort_unstable_by(cmp_pair);
        pairs.truncate(k.min(self.len()));
        Ok(NeighborList {
            entries: pairs
                .into_iter()
                .map(|(distance, index)| Neighbor { index, distance })
                .collect(),
        })
    }
}

fn cmp_pair(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Monte-Carlo estimate of (mean same-class distance, mean cross-class
/// distance) over `sample` pairs each. A diagnostic for how well the
/// embedding separates classes; reported, never enforced.
pub fn separation_diagnostic(
    set: &SupportSet,
    metric: Metric,
    sample: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    use rand::Rng;

    if set.num_classes() < 2 {
        return Err(NedError::SingleClass);
    }
    if sample == 0 {
        return Err(NedError::config("sample count must be positive"));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); set.num_classes()];
    for (i, r) in set.records().iter().enumerate() {
        by_class[r.label].push(i);
    }
    let multi: Vec<usize> = (0..set.num_classes())
        .filter(|&j| by_class[j].len() >= 2)
        .collect();
    if multi.is_empty() {
        return Err(NedError::config(
            "no class has two records; same-class pairs cannot be sampled",
        ));
    }

    let mut rng = stream_rng(seed, Stream::Diagnostic, 0);
    let records = set.records();
    let mut intra = 0.0;
    for _ in 0..sample {
        let class = multi[rng.gen_range(0..multi.len())];
        let members = &by_class[class];
        let a = members[rng.gen_range(0..members.len())];
        let b = loop {
            let b = members[rng.gen_range(0..members.len())];
            if b != a {
                break b;
            }
        };
        intra += metric.distance(&records[a].vector, &records[b].vector);
    }
    let mut inter = 0.0;
    for _ in 0..sample {
        let a = rng.gen_range(0..records.len());
        let b = loop {
            let b = rng.gen_range(0..records.len());
            if records[b].label != records[a].label {
                break b;
            }
        };
        inter += metric.distance(&records[a].vector, &records[b].vector);
    }
    Ok((intra / sample as f64, inter / sample as f64))
}
