use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetheError {
    #[error("pole: {0}")]
    Pole(String),
    #[error("constructed state vanishes")]
    ZeroVector,
    #[error("no product vacuum found for either triangularity convention")]
    NoVacuum,
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("vacuum relation failed: {0}")]
    VacuumMismatch(String),
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, BetheError>;
