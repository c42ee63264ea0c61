//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, NedError>;

#[derive(Debug, Error)]
pub enum NedError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Unparseable input; `line` is 1-based when the format has lines.
    #[error("{path}{}: {detail}", line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Malformed {
        path: PathBuf,
        line: Option<u64>,
        detail: String,
    },

    #[error("record `{id}`: vector has dimension {got}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("record `{id}`: vector contains a non-finite component")]
    NonFinite { id: String },

    #[error("record `{id}`: label `{label}` is not in the label space")]
    UnknownLabel { id: String, label: String },

    #[error("label space mismatch: {detail}")]
    LabelSpaceMismatch { detail: String },

    #[error("class `{label}` has no records in the support set")]
    EmptyClass { label: String },

    #[error("class `{label}` has a single record")]
    SingleRecordClass { label: String },

    #[error("operation requires a non-empty set")]
    EmptySet,

    #[error("operation requires at least two classes")]
    SingleClass,

    #[error("record `{id}`: zero vector is invalid under the cosine metric")]
    ZeroVector { id: String },

    #[error("query has dimension {got}, expected {expected}")]
    QueryDimension { expected: usize, got: usize },

    #[error("k = {k} exceeds the {available} records available")]
    NeighborCount { k: usize, available: usize },

    #[error("query {position}: {source}")]
    BatchQuery {
        position: usize,
        #[source]
        source: Box<NedError>,
    },

    #[error("covariance for class `{label}` is not positive definite")]
    NotPositiveDefinite { label: String },

    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },
}

impl NedError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NedError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        line: Option<u64>,
        detail: impl Into<String>,
    ) -> Self {
        NedError::Malformed {
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(detail: impl Into<String>) -> Self {
        NedError::InvalidConfig {
            detail: detail.into(),
        }
    }
}
