use std::path::PathBuf;

use qhd_core::expr::ExprError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("SyntaxError at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("SchemaError at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("ExpressionError in `{key}`: {source}")]
    Expression { key: String, source: ExprError },

    #[error("IoError on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", source.name())]
    Core {
        #[from]
        source: qhd_core::Error,
    },

    #[error("UsageError: {0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn schema(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { key: key.into(), message: message.into() }
    }

    /// Stable error name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Syntax { .. } => "SyntaxError",
            CliError::Schema { .. } => "SchemaError",
            CliError::Expression { .. } => "ExpressionError",
            CliError::Io { .. } => "IoError",
            CliError::Core { source } => source.name(),
            CliError::Usage(_) => "UsageError",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
