use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (grid sizes, tolerances, JSON schema).
    #[error("configuration error: {0}")]
    Config(String),

    /// Geometric preconditions violated (degenerate curves, obstacle overlap,
    /// evaluation too close to a singular set).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Numerical procedure failed its own quality gate (quadrature tail,
    /// refinement residual, CFL/stability, undersampled phase).
    #[error("numerics error: {0}")]
    Numerics(String),

    /// Input data failed validation (non-solenoidal field, decay violation,
    /// non-unimodular phase data, energy-form positivity).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
