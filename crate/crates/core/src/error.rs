use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input space of {needed} points exceeds the budget of {limit}")]
    Budget { needed: u128, limit: u64 },
    #[error("region is unbounded")]
    Unbounded,
    #[error("region is empty")]
    Empty,
    #[error("floor of a coefficient product is numerically ambiguous")]
    FloorAmbiguity,
    #[error("value does not fit the integer range: {0}")]
    Overflow(String),
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
