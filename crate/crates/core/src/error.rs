use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Format(String),

    #[error("unsupported encoding: {0}")]
    Unsupported(String),

    #[error("input too short: {0}")]
    InputTooShort(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("score sets are not aligned; missing ids: {}", .missing.join(", "))]
    Alignment { missing: Vec<String> },

    #[error("model spec invalid at {location}: {reason}")]
    Validation { location: String, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
