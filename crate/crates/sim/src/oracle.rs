//! Infeasible AMSE-optimal bandwidth from the true regression function.

use npreg_core::asymconst::{EquivalentKernels, Region};
use npreg_core::Kernel;
use serde::{Deserialize, Serialize};

use crate::dgp::DgpSpec;
use crate::error::{Result, SimError};

/// `AMSE(h) = b^2 h^{2(p+1)} + v2 / (n h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amse {
    pub b: f64,
    pub v2: f64,
    pub p: usize,
}

impl Amse {
    pub fn eval(&self, h: f64, n: usize) -> f64 {
        self.b * self.b * h.powi(2 * (self.p as i32 + 1)) + self.v2 / (n as f64 * h)
    }

    /// `[v2 / (2 (p+1) b^2 n)]^{1/(2p+3)}`.
    pub fn minimizer(&self, n: usize) -> f64 {
        let p = self.p as f64;
        (self.v2 / (2.0 * (p + 1.0) * self.b * self.b * n as f64)).powf(1.0 / (2.0 * p + 3.0))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Region implied by the design: the cutoff and the support edges are
/// boundary points.
pub fn design_region(dgp: DgpSpec, point: f64) -> Region {
    if dgp.is_rdd() || point.abs() >= 1.0 {
        Region::Boundary
    } else {
        Region::Interior
    }
}

pub fn amse_constants(
    dgp: DgpSpec,
    point: f64,
    kernel: Kernel,
    p: usize,
    region: Region,
) -> Result<Amse> {
    let e = EquivalentKernels::new(kernel, p, region)?;
    let w2 = e.w_square_integral()?;
    let scale = e.c() / factorial(p + 1);
    let sigma2 = dgp.sigma().powi(2);
    let (deriv, v2) = if dgp.is_rdd() {
        // the left fit sees the mirrored kernel, which flips odd moments
        let mirror = if (p + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let d = dgp.derivative(point, p + 1, true) - mirror * dgp.derivative(point, p + 1, false);
        (d, 2.0 * sigma2 * w2 / dgp.density(point))
    } else {
        (
            dgp.derivative(point, p + 1, true),
            sigma2 * w2 / dgp.density(point),
        )
    };
    if !v2.is_finite() || v2 <= 0.0 {
        return Err(SimError::InvalidConfig(format!(
            "regressor density vanishes at x = {point}"
        )));
    }
    Ok(Amse {
        b: deriv * scale,
        v2,
        p,
    })
}

/// Closed-form AMSE minimizer.
pub fn oracle_bandwidth(
    dgp: DgpSpec,
    point: f64,
    n: usize,
    kernel: Kernel,
    p: usize,
    region: Region,
) -> Result<f64> {
    let a = amse_constants(dgp, point, kernel, p, region)?;
    if a.b.abs() < 1e-12 * a.v2.sqrt().max(1.0) {
        return Err(SimError::ZeroCurvature { point });
    }
    Ok(a.minimizer(n))
}

/// Brute-force minimizer of the AMSE on the grid `lo, lo + step, ..., hi`.
pub fn grid_search_bandwidth(a: &Amse, n: usize, lo: f64, hi: f64, step: f64) -> f64 {
    let m = ((hi - lo) / step).round() as usize;
    (0..=m)
        .map(|i| lo + i as f64 * step)
        .min_by(|x, y| a.eval(*x, n).total_cmp(&a.eval(*y, n)))
        .unwrap_or(lo)
}
