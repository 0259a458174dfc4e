use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("energy diverged: {0}")]
    DivergedEnergy(String),
    #[error("fibering map not bracketed below t = {0:e}")]
    BracketFailure(f64),
    #[error("support under-resolved: {0}")]
    Unresolved(String),
    #[error("degenerate mountain-pass geometry: {0}")]
    Degenerate(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("no listed A gives ratio > 1")]
    NoThreshold,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
