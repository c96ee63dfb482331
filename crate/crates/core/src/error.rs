use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number {0}: 2s must be a non-negative integer")]
    InvalidSpin(f64),

    #[error("operator is not Hermitian (defect {defect:.3e}, allowed {allowed:.3e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigensolver failed to converge after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid ordering: f_plus ({f_plus} MHz) must not be below f_minus ({f_minus} MHz)")]
    InvalidOrdering { f_plus: f64, f_minus: f64 },

    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    #[error(transparent)]
    Parse(#[from] crate::pulse::parse::ParseError),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Errors that indicate a broken numerical invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::NoConvergence(_)
                | Error::InvalidDensityMatrix(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
