use thiserror::Error;

/// Errors raised by the cumulant machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested total order exceeds the configured cap.
    #[error("order {order} exceeds the configured maximum {max}")]
    Capacity { order: u32, max: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A cumulant sequence does not reach the requested order.
    #[error("no cumulant of order {order} available (table holds {available})")]
    MissingCumulant { order: u32, available: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("inner series has a nonzero constant term ({0})")]
    NonzeroConstantTerm(f64),

    #[error("{needed} samples required, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("grid point {index} is invalid: {source}")]
    GridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for order-cap violations, including ones wrapped in a grid-point error.
    pub fn is_capacity(&self) -> bool {
        match self {
            Error::Capacity { .. } => true,
            Error::GridPoint { source, .. } => source.is_capacity(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
