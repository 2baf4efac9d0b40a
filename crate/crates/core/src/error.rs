use thiserror::Error;

/// Errors raised by the bounds engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("closed form for F{label} is invalid: closed form gave {closed_form}, oracle gives {oracle}")]
    ClosedFormInvalid { label: String, closed_form: f64, oracle: f64 },

    #[error("no finite threshold: {0}")]
    NoThreshold(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
