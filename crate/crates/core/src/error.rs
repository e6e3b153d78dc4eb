use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the exponents or inputs failed; the message names the constraint.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("resolution too coarse for domain: {0}")]
    Resolution(String),

    #[error("graph disconnected: {0}")]
    Disconnected(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind, used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Construction(_) => "construction",
            Error::Resolution(_) => "resolution",
            Error::Disconnected(_) => "disconnected",
            Error::InsufficientData(_) => "insufficient_data",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
        }
    }
}
