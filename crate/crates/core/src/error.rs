use thiserror::Error;

/// Errors raised by the testbed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("p must lie in (1, ∞), got {0}")]
    InvalidExponent(f64),

    #[error("no selection: the set is empty")]
    NoSelection,

    #[error("face undefined: the set is unbounded in the requested direction")]
    FaceUndefined,

    #[error("solver failed after {iterations} iterations (residual {residual:e})")]
    SolverFail { residual: f64, iterations: usize },

    #[error("operator is not monotone: min eigenvalue of the symmetric part is {min_eigenvalue:e}")]
    NotMonotone { min_eigenvalue: f64 },

    #[error("sum rule condition fails: domains intersect with Chebyshev margin {margin:e}")]
    DomainOverlap { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
