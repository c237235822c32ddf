//! Command-line front end: configuration, output files and subcommands.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Exit codes: 0 success, 1 validation failure, 2 usage or parameter error,
/// 3 numerical failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Io(s) | CliError::Numerical(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fpme::Error> for CliError {
    fn from(e: fpme::Error) -> Self {
        match e {
            fpme::Error::Param(_) | fpme::Error::Regime(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
