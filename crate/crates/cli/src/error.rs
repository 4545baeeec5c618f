use std::path::PathBuf;
use thiserror::Error;
use tumblelift::{PlanError, ValidationReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario {path}:\n{report}")]
    Validation { path: String, report: ValidationReport },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("planner failed: {name}: {source}", name = .0.name(), source = .0)]
    Planner(#[from] PlanError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Parse { .. } | CliError::Argument(_) => 2,
            CliError::Planner(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
