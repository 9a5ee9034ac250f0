use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the set where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{0} did not converge")]
    Convergence(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solution blew up at t = {t}: max |u| = {max_abs:e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
