use thiserror::Error;

pub type Result<T> = std::result::Result<T, FlyqError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlyqError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("singular matrix (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("ill-conditioned propagator at t = {time} (condition estimate {condition:.3e})")]
    IllConditioned { time: f64, condition: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("time {time} outside horizon [0, {horizon}]")]
    OutOfHorizon { time: f64, horizon: f64 },

    #[error("time {0} is not a grid point")]
    OffGrid(f64),

    #[error("times out of order: {0}")]
    Ordering(String),

    #[error("non-finite entries during integration at t = {0}")]
    Divergence(f64),

    #[error("amplitude tensor needs {needed} entries, budget is {budget}")]
    Capacity { needed: u128, budget: usize },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("normalization failure: {0}")]
    Normalization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl FlyqError {
    /// Failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            FlyqError::Singular { .. }
                | FlyqError::IllConditioned { .. }
                | FlyqError::Divergence(_)
        )
    }
}
