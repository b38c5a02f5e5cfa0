use thiserror::Error;

/// Errors produced by the estimators, the tournament and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt partition: {0}")]
    CorruptPartition(String),

    #[error("grid of {points} points exceeds the budget of {budget}")]
    BudgetExceeded { points: u128, budget: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
