use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at entries {0}")]
    Asymmetric(String),

    #[error("quadratic form is degenerate (det M = 0)")]
    Degenerate,

    #[error("integer overflow evaluating {0}")]
    Overflow(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: {axis} has {got} samples, need at least {need}")]
    GridTooCoarse {
        axis: &'static str,
        got: usize,
        need: usize,
    },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("major arc intervals overlap: {0}")]
    ArcOverlap(String),

    #[error("value {value} at N = {n} is not positive")]
    NonPositive { n: u64, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
