use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum CovError {
    #[error("angle of arrival {0} lies outside the array's domain")]
    DomainViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient {index} is negative ({value})")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("covariance has eigenvalue {value:e} below tolerance {tolerance:e}")]
    NotPsd { value: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate kernel support [{l}, {u}]")]
    DegenerateSupport { l: f64, u: f64 },

    #[error("noise subspace is empty (r = {r}, M = {m})")]
    EmptyNoiseSubspace { r: usize, m: usize },

    #[error("{0} requires a non-zero reference covariance")]
    ZeroReference(&'static str),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error(
        "CCCP descent violated at outer iteration {iteration}: f went from {before} to {after}"
    )]
    DescentViolation {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("phi is only defined above the bulk support edge {edge}, got {omega}")]
    OutsideBulkSupport { omega: f64, edge: f64 },

    #[error("bracket for the minimizer of phi could not be closed below {0}")]
    BracketFailure(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, CovError>;

impl CovError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CovError::Io {
            path: path.into(),
            source,
        }
    }
}
