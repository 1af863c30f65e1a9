//! Error type shared across the crate.

use crate::raster::GridMeta;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A raster file did not match the IRG1/IRGS layout. `offset` is the
    /// byte position at which the problem was detected.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Two grids that must share a pixel layout do not.
    #[error("grid mismatch: expected {expected:?}, got {actual:?}")]
    GridMismatch {
        expected: Box<GridMeta>,
        actual: Box<GridMeta>,
    },

    /// A cluster-quality metric is undefined for the given model (e.g. k < 2).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A fitted model is degenerate (e.g. coincident centroids).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
