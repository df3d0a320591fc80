//! Local polynomial inference with bootstrap bias correction.

pub mod asymconst;
pub mod bootmoments;
pub mod error;
pub mod intervals;
pub mod kernels;
pub mod locpoly;
pub mod normal;
pub mod quadrature;
pub mod rdd;
pub mod residuals;

pub use asymconst::{ConstantsReport, EquivalentKernels, Region};
pub use bootmoments::{BootMethod, BootstrapMoments, PointAnalysis};
pub use error::{Error, Result};
pub use intervals::{CiMethod, CiWarning, ConfidenceInterval, Multiplier, ResamplingPlan};
pub use kernels::Kernel;
pub use locpoly::{FitConfig, LocalFit, QFactor, Sample, Side, WeightVector};
pub use rdd::{RddAnalysis, RddConfig, RddMoments, RddSample};
pub use residuals::{HcType, ResidualVector};
