use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the monitoring pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must lie in {range}, got {value}")]
    Domain {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("loss {value} is outside [0, 1]")]
    LossOutOfRange { value: f64 },

    #[error("tracker of kind {actual} cannot be stepped as {requested}")]
    KindMismatch {
        actual: &'static str,
        requested: &'static str,
    },

    #[error("non-finite value produced while updating {what}")]
    NonFinite { what: &'static str },

    #[error("invalid threshold grid: {0}")]
    Grid(String),

    #[error("expected {expected} per-threshold loss vectors, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("expected batch size {expected}, got {actual} at t={t}")]
    BatchMismatch {
        t: usize,
        expected: usize,
        actual: usize,
    },

    #[error("stream ended after {available} steps, horizon is {horizon}")]
    StreamTruncated { available: usize, horizon: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("record is missing field `{0}`")]
    MissingField(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
