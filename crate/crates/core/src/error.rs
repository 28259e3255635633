use thiserror::Error;

/// Errors raised by rule construction, error computation and the schedule
/// builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature order {0} outside the supported range 1..=200")]
    OrderOutOfRange(usize),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("search budget of {budget} evaluations exhausted; best so far n = {best_n}, e = {best_e:e}")]
    Budget {
        budget: usize,
        best_n: u64,
        best_m: Vec<usize>,
        best_e: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
