//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by problem construction, solvers, oracles, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector had the wrong length for the problem at hand.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Problem data failed validation (sizes, signs, finiteness).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A block or sign partition failed its structural invariants.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// The banded Cholesky factorization hit a non-positive pivot.
    #[error("banded Cholesky breakdown: non-positive pivot {value:e} at position {index}")]
    CholeskyBreakdown { index: usize, value: f64 },

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An iterative oracle ran out of sweeps before reaching its tolerance.
    #[error("oracle did not converge within {sweeps} sweeps (last coordinate change {last_change:e})")]
    NotConverged { sweeps: usize, last_change: f64 },

    /// Exhaustive enumeration found no partition passing the optimality check.
    /// This indicates a bug in the subspace solver or the checker.
    #[error("exhaustive search: no sign partition passed the optimality check")]
    NoOptimalPartition,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
