use thiserror::Error;

/// Errors produced anywhere in the precoding toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A channel spec field failed validation. `key` names the offending field.
    #[error("invalid `{key}`: {reason}")]
    InvalidSpec { key: &'static str, reason: String },

    #[error("degenerate noise; use noisefree module")]
    DegenerateNoise,

    #[error("associated alphabet too large: {size} symbols exceeds the dense limit of {limit}")]
    AlphabetTooLarge { size: u128, limit: usize },

    #[error("index out of range: {what} = {value}, expected {range}")]
    IndexOutOfRange {
        what: &'static str,
        value: usize,
        range: String,
    },

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("non-finite density value {value} at y = {y}")]
    NonFinite { y: f64, value: f64 },

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),

    #[error("instance too large for exact solver: {0}")]
    BudgetExceeded(String),

    #[error("constellation is not an arithmetic progression; use exhaustive_search")]
    NotArithmetic,

    #[error("zero-error construction failed: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
