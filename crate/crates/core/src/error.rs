use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SketchError>;

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    /// A normalisation constant is zero, so the requested quantity is undefined.
    #[error("undefined: {0}")]
    Undefined(&'static str),

    /// The input has rank at most k, so the optimal rank-k residual is zero and
    /// the projection error ratio has no finite value.
    #[error("input is exactly rank <= {k}; projection error is exact")]
    ExactLowRank { k: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SketchError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SketchError::InvalidParameter(msg.into())
    }
}
