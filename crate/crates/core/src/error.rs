use thiserror::Error;

/// Errors raised by the inference library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("trajectory violates observation {index} of sequence {sequence}")]
    ConstraintViolation { sequence: usize, index: usize },

    #[error("no feasible state path for sequence {sequence}")]
    Infeasible { sequence: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
