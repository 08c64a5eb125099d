use thiserror::Error;

/// Errors surfaced by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("polynomial not admissible: {0}")]
    Inadmissible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid character: {0}")]
    InvalidCharacter(String),

    #[error("empty support")]
    EmptySupport,

    #[error("generators are linearly dependent")]
    DependentGenerators,

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("evaluation budget exceeded: {needed} evaluations needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
