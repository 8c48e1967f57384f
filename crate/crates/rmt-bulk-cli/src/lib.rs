//! Configuration, caching and report emission for batch verification runs.

pub mod cache;
pub mod config;
pub mod output;
pub mod run;
mod suites;

pub use cache::Cache;
pub use config::{MeshOverrides, RunConfig, Suite};
pub use run::{run_suite, Manifest, SuiteRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] rmt_bulk::Error),
}

impl CliError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
