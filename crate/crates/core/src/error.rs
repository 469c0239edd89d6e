use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the model's domain, or a malformed scenario.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested problem is too large for the chosen solver.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A policy was queried for a state or slot it has no entry for.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// A solver step was requested before the values it depends on.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("{0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Capacity(_) => 3,
            Error::Numerical(_) => 4,
            Error::Lookup(_) | Error::Sequencing(_) | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
