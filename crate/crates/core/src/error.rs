//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid operator parameters: {0}")]
    InvalidOperator(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("negative value {value:e} at cell {index} after step at t = {time}")]
    Negativity { value: f64, index: usize, time: f64 },

    #[error("non-finite value produced at cell {index}")]
    NonFinite { index: usize },

    #[error("Picard iteration is not contracting: ratios {ratios:?}")]
    NonContraction { ratios: Vec<f64> },

    #[error("Picard iteration did not reach tolerance {tol:e} within {max_iter} iterations (last distance {last:e})")]
    PicardMaxIter { tol: f64, max_iter: usize, last: f64 },

    #[error("insufficient data for fit: {0}")]
    InsufficientCoverage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures that come from the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_)
                | Error::CflViolation { .. }
                | Error::Negativity { .. }
                | Error::NonFinite { .. }
                | Error::NonContraction { .. }
                | Error::PicardMaxIter { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
