use thiserror::Error;

use crate::locpoly::Side;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid integration range [{lower}, {upper}]")]
    InvalidRange { lower: f64, upper: f64 },

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Bandwidth too small for this point: too few in-window points or a
    /// rank-deficient local design.
    #[error("insufficient local data at x = {point}: {in_window} in-window points, {distinct} distinct, need {needed}")]
    InsufficientLocalData {
        point: f64,
        in_window: usize,
        distinct: usize,
        needed: usize,
    },

    #[error("degenerate scaling: C_LP,n = {c_lp} is negligible relative to C_n = {c_n}")]
    DegenerateScaling { c_n: f64, c_lp: f64 },

    #[error("degenerate variance: bootstrap variance {variance} is numerically zero")]
    DegenerateVariance { variance: f64 },

    #[error("observation {index} has leverage {leverage} (isolated in-window point or no residual degrees of freedom)")]
    LeverageOne { index: usize, leverage: f64 },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("moment matrix is singular")]
    SingularMomentMatrix,

    #[error("adaptive quadrature did not converge on [{lower}, {upper}]: error estimate {error}")]
    QuadratureNonconvergence { lower: f64, upper: f64, error: f64 },

    #[error("random number generation failed: {0}")]
    RngFailure(String),

    #[error("treatment column disagrees with 1{{x >= cutoff}} at row {row}")]
    DesignMismatch { row: usize },

    #[error("{side} side: {source}")]
    OnSide {
        side: Side,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidRange { .. } => "invalid_range",
            Error::UnknownKernel(_) => "unknown_kernel",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidSample(_) => "invalid_sample",
            Error::InsufficientLocalData { .. } => "insufficient_local_data",
            Error::DegenerateScaling { .. } => "degenerate_scaling",
            Error::DegenerateVariance { .. } => "degenerate_variance",
            Error::LeverageOne { .. } => "leverage_one",
            Error::InvalidAlpha(_) => "invalid_alpha",
            Error::InvalidProbability(_) => "invalid_probability",
            Error::SingularMomentMatrix => "singular_moment_matrix",
            Error::QuadratureNonconvergence { .. } => "quadrature_nonconvergence",
            Error::RngFailure(_) => "rng_failure",
            Error::DesignMismatch { .. } => "design_mismatch",
            Error::OnSide { source, .. } => source.code(),
        }
    }

    pub(crate) fn on_side(self, side: Side) -> Error {
        Error::OnSide {
            side,
            source: Box::new(self),
        }
    }

    /// The error with any side tag stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::OnSide { source, .. } => source.root(),
            e => e,
        }
    }
}
