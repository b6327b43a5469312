use thiserror::Error;

/// Errors raised by grid construction, stepping, estimation and orchestration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EwsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-positive variance {value} in sample {index}")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("row {row} ({swept} = {value}): {source}")]
    Row {
        row: usize,
        swept: &'static str,
        value: f64,
        #[source]
        source: Box<EwsError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl EwsError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        EwsError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for EwsError {
    fn from(err: std::io::Error) -> Self {
        EwsError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EwsError>;
