use thiserror::Error;

/// Errors shared across the engine.
///
/// Input-document problems (parsing, canonicality, schema violations) are
/// `Document`; everything else is a precondition violation on an operation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("scalar mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("wrong symplectic model: expected {expected}")]
    ModelMismatch { expected: &'static str },

    #[error("input must be pure degree 1: {0}")]
    NotDegreeOne(String),

    #[error("non-canonical input: {0}")]
    NonCanonical(String),

    #[error("direction index out of range: {0}")]
    DirectionRange(String),

    #[error("cannot parse scalar: {0}")]
    ScalarParse(String),

    #[error("eigenvalue growth certificate violated: {0}")]
    Growth(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("not summable: {0}")]
    NonSummable(String),

    #[error("document error: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
