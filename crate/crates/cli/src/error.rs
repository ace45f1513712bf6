use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{context}: {source}")]
    Physics { context: &'static str, source: slowpol_core::Error },
}

impl CliError {
    pub(crate) fn physics(context: &'static str) -> impl FnOnce(slowpol_core::Error) -> Self {
        move |source| CliError::Physics { context, source }
    }
}
