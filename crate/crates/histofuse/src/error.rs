//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("foreground mask is empty")]
    EmptyMask,

    #[error("standardizer has not been fitted")]
    NotFitted,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("infeasible patient split: {0}")]
    InfeasibleSplit(String),

    #[error("degenerate class counts: {0}")]
    DegenerateClassCounts(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint incompatible with this configuration: {0}")]
    IncompatibleCheckpoint(String),

    #[error("training diverged: {0}")]
    NonFiniteLoss(String),

    #[error("failed to read image {path}: {reason}")]
    ImageRead { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
