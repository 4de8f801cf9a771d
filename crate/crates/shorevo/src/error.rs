use std::path::Path;

use thiserror::Error;

/// Problems with dataset files, reported with the file and, where it
/// applies, the 1-based line.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("{path}:{line}: {message}")]
    CrossRef { path: String, line: u64, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Data { path: String, line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LoadError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LoadError::Io { path: path.display().to_string(), source }
    }

    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        LoadError::Schema { path: path.display().to_string(), message: message.into() }
    }

    pub fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        LoadError::Parse { path: path.display().to_string(), line, message: message.into() }
    }

    /// Line of the offending record, when known.
    pub fn line(&self) -> Option<u64> {
        match self {
            LoadError::Parse { line, .. } | LoadError::CrossRef { line, .. } | LoadError::Data { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}
