use crate::Vector;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate direction: norm {norm:e} is below the threshold")]
    DegenerateDirection { norm: f64 },

    #[error("stationary point: gradient norm {norm:e} is below the threshold")]
    StationaryPoint { norm: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    /// The objective returned a non-finite value. `theta` is the point at
    /// which it was evaluated.
    #[error("diverged: loss {loss} at a point with norm {:e}", theta.norm())]
    Diverged { loss: f64, theta: Vector },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
