//! CLI error type carrying the exit-code contract:
//! 0 success, 2 usage/config errors, 3 data-validation errors.

use std::fmt;
use std::path::Path;

use knnctc_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, incompatible inputs, missing files: exit 2.
    Usage(String),
    /// Corrupt or inconsistent file content: exit 3.
    Data(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn usage_in(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Usage(format!("{}: {msg}", path.display()))
    }

    pub fn data_in(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {msg}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_)
            | CoreError::ShapeMismatch { .. }
            | CoreError::EmptyDatastore
            | CoreError::EmptyNeighbors
            | CoreError::GateUnavailable
            | CoreError::InvalidDuration
            | CoreError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Wrap a core error with the file it came from, keeping its class.
pub fn in_file(path: &Path, e: CoreError) -> CliError {
    match CliError::from(e) {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
