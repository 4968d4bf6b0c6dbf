use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point outside chart domain: chart {chart}, coords {coords:?}")]
    ChartDomain { chart: u8, coords: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integration failed at u = {u}: {reason}")]
    Integration { u: f64, reason: String },

    #[error("degenerate plane: Gram determinant {0:e}")]
    DegeneratePlane(f64),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("invalid cover instance: {0}")]
    InvalidCover(String),

    #[error("numerical anomaly: {0}")]
    Anomaly(String),

    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
