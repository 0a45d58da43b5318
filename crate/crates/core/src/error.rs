use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Structurally invalid input (shape mismatch, malformed spec, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative solve ran out of iterations.
    #[error(
        "{what} did not converge after {iterations} iterations (last L1 residual {residual:.3e}, tolerance {tolerance:.3e})"
    )]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
