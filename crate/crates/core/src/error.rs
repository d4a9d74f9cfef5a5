use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or the config file is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with arguments that violate its preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// LED-on variance does not exceed the LED-off (classical) floor.
    #[error(
        "no measurable quantum contribution: LED-on variance {on} does not exceed LED-off variance {off}"
    )]
    NoQuantumContribution { on: f64, off: f64 },

    /// A file does not follow the expected binary layout.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
