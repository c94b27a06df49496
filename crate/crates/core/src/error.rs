use thiserror::Error;

/// Errors produced by problem construction, parsing, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid problem: {0}")]
    Validation(String),

    #[error("malformed problem document: {0}")]
    Malformed(#[from] serde_json::Error),

    #[error("unknown loss kind {kind:?} in term {term_index}")]
    UnknownLossKind { kind: String, term_index: usize },

    #[error("box bounds inverted at coordinate {index}: l = {lower} > u = {upper}")]
    BoxInverted {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("refusing exhaustive enumeration: m = {m} exceeds limit {limit} (2^m subproblems)")]
    TooManyTerms { m: usize, limit: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
