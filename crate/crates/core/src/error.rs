use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the documented range of an operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A point was expected inside the domain but is not.
    #[error("point {0:?} is not in the domain")]
    OutsideDomain(Vec<f64>),

    /// The domain or operator kind does not support the requested computation.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative method failed.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A domain-spec document could not be parsed or validated.
    #[error("malformed domain spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
