//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the numerical kernels.
///
/// The CLI maps [`Error::Domain`] and [`Error::Config`] to exit code 1 and the
/// solver-side variants to exit code 2.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Missing or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative solver failed; `trace` holds the residual history.
    #[error("solver error: {message} (trace: {trace:?})")]
    Solver { message: String, trace: Vec<f64> },

    /// A root or bracket search found no sign change.
    #[error("search error: {0}")]
    Search(String),

    /// Tail extrapolation disagreed with itself beyond the allowed spread.
    #[error("unreliable tail: spread {spread:e} exceeds limit {limit:e}")]
    UnreliableTail { spread: f64, limit: f64 },

    /// Combinatorial data that cannot describe a nonempty face.
    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    /// Malformed tabular or structured input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Convenience constructor for [`Error::Solver`].
    pub fn solver(msg: impl Into<String>, trace: Vec<f64>) -> Self {
        Error::Solver {
            message: msg.into(),
            trace,
        }
    }

    /// True for errors that originate in the input rather than in a solver.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Inconsistent(_) | Error::Parse { .. }
        )
    }
}

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
