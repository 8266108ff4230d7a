use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A posterior ended up in a state that exact arithmetic rules out.
    #[error("numerical corruption: {0}")]
    NumericalCorruption(String),

    #[error("arm index {index} out of range for {arms} arms")]
    InvalidArm { index: usize, arms: usize },

    #[error("arm {0} has not been observed yet")]
    UninitializedArm(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
