//! Standard normal distribution function and quantile.

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// `Phi(x)`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `z_p = Phi^{-1}(p)` for `p` in (0, 1).
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p))
}
