//! Library side of the `treebridge` command: configuration, dataset loading and
//! the subcommands, kept separate from argument parsing so they can be tested.

pub mod commands;
pub mod config;
pub mod data;

use std::path::PathBuf;

use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Input(_) => 5,
            CliError::Compute(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::Compute(_) => "compute",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn compute(e: impl std::fmt::Display) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub const EXIT_CODES_HELP: &str = "EXIT CODES:
    0  success
    2  bad command-line usage
    3  invalid configuration (unknown or missing key, bad value)
    4  file could not be read or written
    5  malformed input (Newick, taxon map, dataset)
    6  computation failed (bridge initialization, estimator failure)";
