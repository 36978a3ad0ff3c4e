use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cluster {label} is empty")]
    EmptyCluster { label: usize },

    #[error("clusters {first} and {second} share the same center")]
    DegenerateCenters { first: usize, second: usize },

    #[error("iteration did not converge within {max_iter} sweeps")]
    NoConvergence { max_iter: usize },

    #[error("connectivity entry ({row}, {col}) = {value} is not a probability")]
    InvalidProbability { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("all degrees are zero")]
    ZeroGraph,

    #[error("pairwise distances differ by {max_diff:e}")]
    DistanceMismatch { max_diff: f64 },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
