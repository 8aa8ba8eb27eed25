use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("dimension mismatch: expected {expected} grid values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical blow-up at t = {t}: non-finite coefficient in {field}")]
    BlowUp { t: f64, field: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
