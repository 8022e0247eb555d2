use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value, with the offending key (and line when known).
    #[error("config error at {context}: {message}")]
    Config { context: String, message: String },

    /// Arguments outside an operation's domain (dimension mismatch, k too large, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {steps} steps (best residual {residual:.3e})")]
    Convergence { steps: usize, residual: f64 },

    /// Spectral gap too small for the top eigenvector to be well defined.
    #[error("degenerate spectral gap {gap:.3e} below threshold {threshold:.3e}")]
    Degenerate { gap: f64, threshold: f64 },

    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    Size { needed: u128, budget: u128 },

    #[error("mode error: {0}")]
    Mode(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("evaluator failed: {0}")]
    Evaluator(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn config(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Invariant(_) => 3,
            Error::Convergence { .. } => 4,
            _ => 1,
        }
    }
}
