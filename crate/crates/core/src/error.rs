use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("{routine} failed to converge")]
    NoConvergence { routine: &'static str },

    #[error("environment not converged after {iterations} iterations (residual {residual:.3e})")]
    EnvNotConverged { iterations: usize, residual: f64 },

    #[error("isometry not converged after {iterations} outer iterations (projector distance {distance:.3e})")]
    IsometryNotConverged { iterations: usize, distance: f64 },

    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(args: fmt::Arguments<'_>) -> Self {
        Error::Dimension(args.to_string())
    }

    /// True for failures of an iterative numerical method (as opposed to
    /// bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::EnvNotConverged { .. }
                | Error::IsometryNotConverged { .. }
                | Error::NotSymmetric { .. }
        )
    }
}
