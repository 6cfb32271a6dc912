use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the cost domain [0, 1]")]
    Domain { value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cost derivative vanishes at average {avg}; response probability undefined")]
    ZeroDerivative { avg: f64 },

    #[error("numeric failure at step {step}: {reason}")]
    Numeric { step: u64, reason: String },

    #[error("capacity {capacity} is infeasible for a population of {size}")]
    Infeasible { capacity: f64, size: usize },

    #[error("bisection did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual})")]
    NonConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("population mismatch: {0}")]
    Mismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    /// Stable short tag used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Config(_) => "config",
            Error::ZeroDerivative { .. } => "zero_derivative",
            Error::Numeric { .. } => "numeric",
            Error::Infeasible { .. } => "infeasible",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Mismatch(_) => "mismatch",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
