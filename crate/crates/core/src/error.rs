use thiserror::Error;

/// Errors raised by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A descriptor violates one of its structural invariants.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue sequence is not summable: {0}")]
    NotSummable(String),

    /// The operation needs information the eigensystem or operator does not carry.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A numerical precondition of a bound or lemma is not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A size or compute budget would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
