use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("line {line}: duplicate determinant (first seen on line {first})")]
    Duplicate { line: usize, first: usize },

    #[error("degenerate state: squared norm is zero")]
    DegenerateState,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("density matrix trace deviates from 1 by {0:e}")]
    Normalization(f64),

    #[error("density matrix is not positive semidefinite (eigenvalue {0:e})")]
    PsdViolation(f64),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
