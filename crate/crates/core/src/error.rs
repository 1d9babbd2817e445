use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature {index} = {value} is outside the unit interval")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("feature {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("model has no granules")]
    EmptyModel,

    #[error("invalid hyper-parameter: {0}")]
    InvalidHyperParams(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("window of {window} samples is longer than the recording ({available} samples)")]
    WindowTooLong { window: usize, available: usize },

    #[error("window must contain at least 2 samples, got {0}")]
    WindowTooShort(usize),

    #[error("band {band} contains no spectral bins at this resolution")]
    EmptyBand { band: &'static str },

    #[error("recording is missing channel {0}")]
    MissingChannel(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Malformed {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidHyperParams(_) | Error::Usage(_))
    }
}
