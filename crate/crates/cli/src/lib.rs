//! Experiment runner behind the `privtrade` binary.
//!
//! [`spec`] holds the serializable experiment descriptions, [`commands`] runs
//! them and [`output`] renders results as CSV or JSON with a metadata header.

pub mod commands;
pub mod output;
pub mod spec;

use thiserror::Error;

pub use commands::{run, Outcome};
pub use spec::{Command, CommandKind, ExperimentSpec, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("internal assertion failed: {0}")]
    Assertion(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    /// 2 for bad input, 3 for a failed internal check, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Assertion(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<privtrade::Error> for CliError {
    fn from(e: privtrade::Error) -> Self {
        match e {
            privtrade::Error::Assertion(msg) => CliError::Assertion(msg),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
