use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) | CliError::Io { .. } => ExitCode::from(1),
            CliError::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl From<leafdeg::Error> for CliError {
    fn from(e: leafdeg::Error) -> Self {
        use leafdeg::Error::*;
        match e {
            Singular { .. } | Residual { .. } | EventCapExceeded { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
