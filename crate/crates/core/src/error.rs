use thiserror::Error;

/// Errors raised by the certification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension: {0} is not prime")]
    UnsupportedDimension(usize),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// A bisection predicate was not monotone on the scan grid.
    #[error("ambiguous threshold: predicate not monotone at samples {samples:?}")]
    AmbiguousThreshold { samples: Vec<(f64, bool)> },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
