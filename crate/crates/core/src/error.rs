use thiserror::Error;

/// Errors produced by the samplers, the scheme and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel was evaluated on its diagonal.
    #[error("kernel is singular at tau = u = {0}")]
    Singularity(f64),

    /// A numerical routine failed (factorization, quadrature).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested quantity is only available for a restricted parameter regime.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
