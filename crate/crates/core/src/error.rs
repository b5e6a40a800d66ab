use thiserror::Error;

/// Errors produced by the ttrose toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not primitive; check is_primitive before asking for a PF eigenvalue")]
    NotPrimitive,

    #[error("power iteration did not converge after {iterations} steps (bracket [{lower}, {upper}])")]
    NoConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("map is not a homotopy equivalence: {0}")]
    NotHomotopyEquivalence(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
