//! Front end for `levy-cumulants`: single cumulants, parameter scans,
//! verification against independent routes, and partition dumps.

pub mod commands;
pub mod config;
pub mod format;

pub use config::{OutputFormat, RunConfig};

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Capacity(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Capacity(_) => 3,
        }
    }
}

impl From<levy_cumulants::Error> for CliError {
    fn from(e: levy_cumulants::Error) -> Self {
        if e.is_capacity() {
            CliError::Capacity(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}
