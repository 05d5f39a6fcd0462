use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the operation's domain (shape, symmetry, normalization, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested method cannot handle this input.
    #[error("method unsupported: {0}")]
    Unsupported(String),

    /// A numerical procedure failed (non-convergence, non-physical state, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Failure while evaluating a family at a perturbed point.
    #[error("evaluation failed for parameter {index}: {source}")]
    Propagation {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors that come from input validation rather than arithmetic.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Unsupported(_) => true,
            Error::Numerical(_) => false,
            Error::Propagation { source, .. } => source.is_validation(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
