use std::path::PathBuf;

use lorentz_core::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Geometry { context: String, source: GeometryError },

    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl LabError {
    /// Process exit code: 1 I/O, 2 usage, 3 configuration, 4 numerical failure or anomaly.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io { .. } => 1,
            LabError::Usage(_) => 2,
            LabError::Config(_) => 3,
            LabError::Geometry { source, .. } => match source {
                GeometryError::InvalidFamily(_) | GeometryError::Configuration(_) => 3,
                _ => 4,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, LabError>;
}

impl<T> Context<T> for Result<T, GeometryError> {
    fn context(self, what: &str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Geometry { context: what.to_string(), source })
    }
}
