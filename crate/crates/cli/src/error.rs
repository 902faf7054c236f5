use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },

    #[error("schedule file {path}: {reason}")]
    ScheduleFile { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] modeswitch::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        Self::Config {
            field: field.into(),
            reason: reason.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Parse { .. } => exit::CONFIG,
            Self::ScheduleFile { .. } | Self::Core(modeswitch::Error::LengthMismatch { .. }) => {
                exit::INPUT
            }
            Self::Io { .. } | Self::Csv(_) | Self::Json(_) => exit::IO,
            Self::Core(_) => exit::FAILURE,
        }
    }
}

pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Validation check failed or an unexpected numerical error.
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const UNDERFLOW: u8 = 3;
    pub const INPUT: u8 = 4;
    pub const IO: u8 = 5;
}

pub type Result<T> = std::result::Result<T, CliError>;
