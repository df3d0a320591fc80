use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unexpected columns: {0}")]
    Schema(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] npreg_core::Error),

    #[error(transparent)]
    Sim(#[from] npreg_sim::SimError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Schema(_) => "schema_error",
            CliError::Io { .. } => "io_error",
            CliError::Config { .. } => "config_error",
            CliError::Usage(_) => "invalid_arguments",
            CliError::Core(e) => e.code(),
            CliError::Sim(e) => e.code(),
        }
    }

    /// Process exit status: 2 for bad invocations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, e: impl ToString) -> CliError {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn to_object(&self) -> ErrorObject {
        ErrorObject {
            schema_version: crate::report::SCHEMA_VERSION,
            error: ErrorBody {
                code: self.code(),
                message: self.to_string(),
                line: match self {
                    CliError::Parse { line, .. } => Some(*line),
                    CliError::Config { line, .. } => Some(*line as u64),
                    _ => None,
                },
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorObject {
    pub schema_version: u32,
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
}
