use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Cholesky (or other) factorization failed, usually a non-SPD matrix.
    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Invalid experiment or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical procedure did not reach its stopping criterion.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
