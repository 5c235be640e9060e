//! Crate-wide error type. The binary prints these as a single
//! machine-parsable line (`error[CODE]: text`) and exits nonzero.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(#[from] crate::formats::FormatError),
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
}

impl CliError {
    /// Stable machine-parsable code for scripting against the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io(_) => "E_IO",
            CliError::Format(_) => "E_FORMAT",
            CliError::Config(_) => "E_CONFIG",
            CliError::Dataset(_) => "E_DATASET",
            CliError::Pipeline(_) => "E_PIPELINE",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
