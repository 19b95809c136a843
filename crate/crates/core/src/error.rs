use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("numerical failure at step {step}: {what}")]
    NumericalFailure { step: usize, what: String },

    #[error("Q_uu + lambda*I is not positive definite at step {step}")]
    NotPositiveDefinite { step: usize },

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn numerical(step: usize, what: impl Into<String>) -> Self {
        Error::NumericalFailure {
            step,
            what: what.into(),
        }
    }
}
