use thiserror::Error;

/// Errors produced by the receiver, the code machinery and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate covariance: diagonal entry {index} is {value}")]
    DegenerateCovariance { index: usize, value: f64 },

    #[error("invalid correlation {value} at ({row}, {col}); magnitude exceeds 1")]
    InvalidCorrelation { row: usize, col: usize, value: f64 },

    #[error("matrix is not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("covariance matrix is singular even after regularization")]
    SingularCovariance,

    #[error("LDPC construction failed after {attempts} attempts")]
    ConstructionFailed { attempts: usize },

    #[error("insufficient samples: need at least {needed}, got {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
