use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: unbalanced braces at end of file")]
    UnbalancedBraces { path: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what} at line {line}: {message}")]
    Format { what: &'static str, line: usize, message: String },

    #[error("{} was produced with config {found}, expected {expected}", path.display())]
    ConfigMismatch { path: PathBuf, expected: String, found: String },

    #[error("model file: {0}")]
    Model(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::UnbalancedBraces { .. } => "unbalanced_braces",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::ConfigMismatch { .. } => "config_mismatch",
            Error::Model(_) => "model",
            Error::Diverged { .. } => "diverged",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
