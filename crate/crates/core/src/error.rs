use alloc::string::String;

/// Errors produced by the aggregation toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("model bank is empty")]
    EmptyBank,
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("rotation basis gives a degenerate weight denominator ({0:e})")]
    DegenerateRotation(f64),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("no descent direction found after {halvings} step halvings")]
    NoDescent { halvings: usize },
    #[error("degenerate theorem case: {0}")]
    DegenerateCase(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
