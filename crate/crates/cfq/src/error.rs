use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is a perfect square")]
    PerfectSquare(u64),

    #[error("{0} is not squarefree")]
    NotSquarefree(u64),

    #[error("half-integer expansion requires d = 1 mod 4, got d = {0}")]
    BadMode(u64),

    #[error("argument out of supported range: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("word is not a palindrome: {0:?}")]
    NotPalindromic(Vec<u64>),

    #[error("word is not admissible: {0}")]
    Inadmissible(String),

    #[error("family synthesis failed: {0}")]
    Synthesis(String),

    #[error("Pell oracle cap exceeded at d = {d} (y cap {cap})")]
    OracleCap { d: u64, cap: u64 },

    #[error("precision insufficient for d = {d}: class number residual {residual}")]
    RoundingGuard { d: u64, residual: f64 },

    #[error("{0} is not a fundamental discriminant")]
    NonFundamental(u64),

    #[error("two-adic marginal mismatch: {0}")]
    MarginalMismatch(String),

    #[error("moment computation did not converge: {0}")]
    NonConvergence(String),

    #[error("saddle point bracketing failed for tau = {0}")]
    Bracketing(f64),

    #[error("cache is corrupt: {0}")]
    CacheCorrupt(String),

    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
