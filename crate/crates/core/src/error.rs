use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A linear or eigenvalue solve failed.
    #[error("solver error: {0}")]
    Solver(String),
    /// A NaN or infinity appeared during time stepping.
    #[error("numerical failure: {0}")]
    NonFinite(String),
    /// A required precondition on the input data does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Not enough data to carry out a fit or a bundle.
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
