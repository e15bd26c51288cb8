use thiserror::Error;

/// Every failure the library reports.
///
/// The CLI maps [`ShockError::is_validation`] errors to exit code 1 and all
/// remaining ones to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShockError {
    #[error("invalid gas model: {0}")]
    InvalidModel(String),
    #[error("invalid shock states: {0}")]
    InvalidShock(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("profile integration failed: {0}")]
    ProfileFailure(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("specific volume {value} fell below the floor {floor} at x = {position}")]
    Vacuum { value: f64, floor: f64, position: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("shift integration too stiff: {substeps} substeps requested at t = {time}")]
    ShiftStiff { substeps: usize, time: f64 },
    #[error("rescaling equivalence broken: mismatch {mismatch} exceeds {tolerance}")]
    RescalingMismatch { mismatch: f64, tolerance: f64 },
    #[error("quadrature not converged: node doubling changed the result by {change}")]
    Quadrature { change: f64 },
    #[error("i/o failure: {0}")]
    Io(String),
}

impl ShockError {
    /// True for input errors (bad model, states or configuration).
    #[must_use]
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::InvalidModel(_) | Self::InvalidShock(_) | Self::InvalidConfig(_) | Self::InvalidArgument(_)
        )
    }
}

impl From<std::io::Error> for ShockError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for ShockError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ShockError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ShockError>;
