use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("state is not close to the solution ray: {0}")]
    NonConvergence(String),

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("ambiguous null space: {0}")]
    Ambiguity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
