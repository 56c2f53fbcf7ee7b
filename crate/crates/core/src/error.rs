use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integration failed at t = {t_reached} us: {reason}")]
    IntegrationFailure { t_reached: f64, reason: String },

    #[error("fit did not converge (residual {residual:.3e}): {reason}")]
    FitFailure { residual: f64, reason: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("undefined ratio: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::IntegrationFailure { .. } | Error::FitFailure { .. } | Error::Singular(_))
    }
}
