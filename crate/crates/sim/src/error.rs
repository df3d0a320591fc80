use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// The leading bias term vanishes, so the AMSE has no interior minimizer.
    #[error("zero curvature at x = {point}: oracle bandwidth undefined, use a fixed bandwidth")]
    ZeroCurvature { point: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("random number generation failed: {0}")]
    RngFailure(String),

    #[error("could not start worker pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Core(#[from] npreg_core::Error),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::ZeroCurvature { .. } => "zero_curvature",
            SimError::InvalidConfig(_) => "invalid_config",
            SimError::RngFailure(_) => "rng_failure",
            SimError::ThreadPool(_) => "thread_pool",
            SimError::Core(e) => e.code(),
        }
    }
}
