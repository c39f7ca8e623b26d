use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {detail}")]
    Config { path: String, line: usize, detail: String },

    #[error("{path}:{line}: unknown key '{key}' for {subcommand}")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
        subcommand: String,
    },

    #[error("invalid value '{value}' for {key}: {detail}")]
    InvalidValue { key: String, value: String, detail: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] spread_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::UnknownKey { .. } => "unknown_key",
            CliError::InvalidValue { .. } => "invalid_value",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
        }
    }

    /// The single machine-readable line printed on stderr.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: kind={} message={}", self.kind(), msg)
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
