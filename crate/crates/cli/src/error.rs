use std::fmt;

use korn::KornError;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    CheckFailure = 1,
    ConfigError = 2,
    NotConverged = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { status: Status::ConfigError, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        CliError { status: Status::CheckFailure, message: message.into() }
    }

    pub fn not_converged(message: impl Into<String>) -> Self {
        CliError { status: Status::NotConverged, message: message.into() }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        CliError { message: format!("{what}: {}", self.message), ..self }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<KornError> for CliError {
    fn from(e: KornError) -> Self {
        let status = match e {
            KornError::InvalidParameter { .. } | KornError::Geometry(_) | KornError::MissingEmbedding(_) => {
                Status::ConfigError
            }
            KornError::NotConverged { .. } => Status::NotConverged,
            _ => Status::CheckFailure,
        };
        CliError { status, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::check(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::check(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::check(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
