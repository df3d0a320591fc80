//! Equivalent kernels, their convolutions and the asymptotic constants of
//! the prepivoted intervals.
//!
//! Interior quantities live on `(-1, 1)`, boundary ones on `[0, 1)` with the
//! left-truncated kernel `w_bnd(v, s)` supported on `[-min(s, 1), 1)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quadrature::integrate;

/// Absolute tolerance of inner (convolution) integrals.
pub const INNER_TOLERANCE: f64 = 1e-11;
/// Absolute tolerance of outer integrals of squared kernels.
pub const OUTER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Interior,
    Boundary,
}

impl Region {
    /// Left end of the support of `w`.
    pub fn lower(self) -> f64 {
        match self {
            Region::Interior => -1.0,
            Region::Boundary => 0.0,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Interior => "interior",
            Region::Boundary => "boundary",
        })
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Region::Interior),
            "boundary" => Ok(Region::Boundary),
            other => Err(Error::InvalidConfig(format!("unknown region `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    W,
    WGpBc,
    WConv,
    WConvBnd,
    WPlp,
    WMplp,
    WRbc,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::W,
        Family::WGpBc,
        Family::WConv,
        Family::WConvBnd,
        Family::WPlp,
        Family::WMplp,
        Family::WRbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::W => "w",
            Family::WGpBc => "w_gp_bc",
            Family::WConv => "w_conv",
            Family::WConvBnd => "w_conv_bnd",
            Family::WPlp => "w_plp",
            Family::WMplp => "w_mplp",
            Family::WRbc => "w_rbc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivKernelTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub family: Family,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub kernel: Kernel,
    pub p: usize,
    pub region: Region,
    pub c: f64,
    pub c_lp: f64,
    pub q: f64,
    pub k_plp: f64,
    pub k_mplp: f64,
    pub k_rbc: f64,
    /// `int w^2`, the conventional variance constant.
    pub k_conventional: f64,
    /// `sqrt(k_mplp / k_rbc)`; in the interior `k_mplp = k_plp`.
    pub length_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub u: f64,
    pub w_plp: f64,
    pub w_mplp: f64,
    pub w_rbc: f64,
}

/// Half-away-from-zero rounding to 2 decimals, as tables are displayed.
///
/// Values within 1e-7 of a half-cent are snapped first so that exact
/// ties such as 1.125 are not lost to binary representation.
pub fn round_display(x: f64) -> f64 {
    let cents = ((x * 100.0) * 1e7).round() / 1e7;
    cents.round() / 100.0
}

/// `int_lower^1 r(v) r(v)' K(v) dv` for `r` of the given order.
fn moment_matrix(kernel: Kernel, order: usize, lower: f64) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(order + 1, order + 1);
    for i in 0..=order {
        for j in 0..=order {
            m[(i, j)] = kernel.moment((i + j) as u32, lower, 1.0, false)?;
        }
    }
    Ok(m)
}

/// Row `k` of `M^{-1}` (`M` is symmetric, so this is `M^{-1} e_k`).
fn inverse_row(m: DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    let n = m.nrows();
    let mut e = DVector::zeros(n);
    e[k] = 1.0;
    let x = m.lu().solve(&e).ok_or(Error::SingularMomentMatrix)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMomentMatrix);
    }
    Ok(x.iter().copied().collect())
}

fn poly(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * u + k)
}

/// Runs a fallible integrand through the infallible quadrature, keeping
/// the first error.
fn integrate_fallible(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut first_err = None;
    let v = integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        breakpoints,
        tol,
    )?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Equivalent kernels for one kernel, order and region.
#[derive(Debug, Clone)]
pub struct EquivalentKernels {
    kernel: Kernel,
    p: usize,
    region: Region,
    /// `iota_0' M_p^{-1}` over the region.
    row0: Vec<f64>,
    /// `iota_{p+1}' M_{p+1}^{-1}` over the region.
    gp_row: Vec<f64>,
    c: f64,
}

impl EquivalentKernels {
    pub fn new(kernel: Kernel, p: usize, region: Region) -> Result<Self> {
        if p.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("order must be odd, got {p}")));
        }
        let lower = region.lower();
        let row0 = inverse_row(moment_matrix(kernel, p, lower)?, 0)?;
        let gp_row = inverse_row(moment_matrix(kernel, p + 1, lower)?, p + 1)?;
        let c = Self::curvature_at(kernel, p, &row0, lower)?;
        Ok(EquivalentKernels {
            kernel,
            p,
            region,
            row0,
            gp_row,
            c,
        })
    }

    /// `int w(v) v^{p+1}` in closed form from the kernel moments.
    fn curvature_at(kernel: Kernel, p: usize, row0: &[f64], lower: f64) -> Result<f64> {
        let mut c = 0.0;
        for (j, r) in row0.iter().enumerate() {
            c += r * kernel.moment((p + 1 + j) as u32, lower, 1.0, false)?;
        }
        Ok(c)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn region(&self) -> Region {
        self.region
    }

    fn in_support(&self, u: f64) -> bool {
        u >= self.region.lower() && u < 1.0 && u > -1.0
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = vec![-1.0, 0.0, 1.0];
        b.extend_from_slice(self.kernel.interior_kinks());
        b
    }

    /// `w(u)`.
    pub fn w(&self, u: f64) -> f64 {
        if self.in_support(u) {
            poly(&self.row0, u) * self.kernel.eval(u)
        } else {
            0.0
        }
    }

    /// `w_bnd(v, s)`: equivalent kernel truncated at `-min(s, 1)`.
    pub fn w_bnd(&self, v: f64, s: f64) -> Result<f64> {
        let s = s.clamp(0.0, 1.0);
        if v < -s || v >= 1.0 || v <= -1.0 {
            return Ok(0.0);
        }
        let row = inverse_row(moment_matrix(self.kernel, self.p, -s)?, 0)?;
        Ok(poly(&row, v) * self.kernel.eval(v))
    }

    /// `C = int w(u) u^{p+1} du`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `C(s) = int w_bnd(v, s) v^{p+1} dv`.
    pub fn c_truncated(&self, s: f64) -> Result<f64> {
        let lower = -s.clamp(0.0, 1.0);
        let row = inverse_row(moment_matrix(self.kernel, self.p, lower)?, 0)?;
        Self::curvature_at(self.kernel, self.p, &row, lower)
    }

    /// `C_LP`; equal to `C` in the interior.
    pub fn c_lp(&self) -> Result<f64> {
        match self.region {
            Region::Interior => Ok(self.c),
            Region::Boundary => integrate_fallible(
                |s| Ok(self.w(s) * self.c_truncated(s)?),
                0.0,
                1.0,
                &self.breaks(),
                OUTER_TOLERANCE * 1e-2,
            ),
        }
    }

    pub fn q(&self) -> Result<f64> {
        let c_lp = self.c_lp()?;
        if c_lp.abs() < 1e-12 * self.c.abs() {
            return Err(Error::DegenerateScaling { c_n: self.c, c_lp });
        }
        Ok(self.c / c_lp)
    }

    /// `w_GP-bc(u) = C iota_{p+1}' M_{p+1}^{-1} r_{p+1}(u) K(u)`.
    pub fn w_gp_bc(&self, u: f64) -> f64 {
        if self.in_support(u) {
            self.c * poly(&self.gp_row, u) * self.kernel.eval(u)
        } else {
            0.0
        }
    }

    pub fn w_rbc(&self, u: f64) -> f64 {
        self.w(u) - self.w_gp_bc(u)
    }

    /// `int w(r) w(u - r) dr`, the interior convolution.
    pub fn w_conv(&self, u: f64) -> Result<f64> {
        if !(-2.0..=2.0).contains(&u) {
            return Ok(0.0);
        }
        let mut b = self.breaks();
        b.extend([u - 1.0, u, u + 1.0]);
        for k in self.kernel.interior_kinks() {
            b.push(u - k);
        }
        let lo = self.region.lower();
        integrate(|r| self.w(r) * self.w(u - r), lo, 1.0, &b, INNER_TOLERANCE)
    }

    /// `int_0^1 w(r) w_bnd(u - r, r) dr`, the boundary convolution.
    pub fn w_conv_bnd(&self, u: f64) -> Result<f64> {
        if !(0.0..=2.0).contains(&u) {
            return Ok(0.0);
        }
        let mut b = self.breaks();
        b.extend([u - 1.0, u]);
        for k in self.kernel.interior_kinks() {
            b.push(u - k);
        }
        integrate_fallible(
            |r| Ok(self.w(r) * self.w_bnd(u - r, r)?),
            0.0,
            1.0,
            &b,
            INNER_TOLERANCE,
        )
    }

    /// Convolution appropriate to the region.
    fn conv(&self, u: f64) -> Result<f64> {
        match self.region {
            Region::Interior => self.w_conv(u),
            Region::Boundary => self.w_conv_bnd(u),
        }
    }

    /// `2 w - conv`.
    pub fn w_plp(&self, u: f64) -> Result<f64> {
        Ok(2.0 * self.w(u) - self.conv(u)?)
    }

    /// `(1 + Q) w - Q conv`, with `Q` passed in to avoid recomputation.
    pub fn w_mplp_with(&self, q: f64, u: f64) -> Result<f64> {
        Ok((1.0 + q) * self.w(u) - q * self.conv(u)?)
    }

    pub fn w_mplp(&self, u: f64) -> Result<f64> {
        self.w_mplp_with(self.q()?, u)
    }

    pub fn eval(&self, family: Family, u: f64) -> Result<f64> {
        match family {
            Family::W => Ok(self.w(u)),
            Family::WGpBc => Ok(self.w_gp_bc(u)),
            Family::WConv => self.w_conv(u),
            Family::WConvBnd => self.w_conv_bnd(u),
            Family::WPlp => self.w_plp(u),
            Family::WMplp => self.w_mplp(u),
            Family::WRbc => Ok(self.w_rbc(u)),
        }
    }

    pub fn table(&self, family: Family, grid: &[f64]) -> Result<EquivKernelTable> {
        let q = self.q()?;
        let values = grid
            .iter()
            .map(|&u| match family {
                Family::WMplp => self.w_mplp_with(q, u),
                f => self.eval(f, u),
            })
            .collect::<Result<_>>()?;
        Ok(EquivKernelTable {
            grid: grid.to_vec(),
            values,
            family,
            region: self.region,
        })
    }

    /// Support of the prepivoted variance kernels.
    pub fn plot_range(&self) -> (f64, f64) {
        match self.region {
            Region::Interior => (-2.0, 2.0),
            Region::Boundary => (0.0, 2.0),
        }
    }

    /// Evenly spaced samples of `w_plp`, `w_mplp` and `w_rbc`.
    pub fn figure_grid(&self, points: usize) -> Result<Vec<GridRow>> {
        if points < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
        }
        let q = self.q()?;
        let (a, b) = self.plot_range();
        (0..points)
            .map(|i| {
                let u = a + (b - a) * i as f64 / (points - 1) as f64;
                let conv = self.conv(u)?;
                let w = self.w(u);
                Ok(GridRow {
                    u,
                    w_plp: 2.0 * w - conv,
                    w_mplp: (1.0 + q) * w - q * conv,
                    w_rbc: self.w_rbc(u),
                })
            })
            .collect()
    }

    fn square_integral(&self, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let (a, b) = self.plot_range();
        let mut br = self.breaks();
        br.extend([-2.0, 2.0]);
        for k in self.kernel.interior_kinks() {
            br.extend([k - 1.0, k + 1.0]);
        }
        integrate_fallible(|u| f(u).map(|v| v * v), a, b, &br, OUTER_TOLERANCE)
    }

    /// `int w^2`, the conventional variance constant.
    pub fn w_square_integral(&self) -> Result<f64> {
        self.square_integral(|u| Ok(self.w(u)))
    }

    pub fn constants(&self) -> Result<ConstantsReport> {
        let c_lp = self.c_lp()?;
        let q = self.q()?;
        let (k_plp, k_mplp) = match self.region {
            Region::Interior => {
                let k = self.square_integral(|u| self.w_plp(u))?;
                (k, k)
            }
            Region::Boundary => (
                self.square_integral(|u| self.w_plp(u))?,
                self.square_integral(|u| self.w_mplp_with(q, u))?,
            ),
        };
        let k_rbc = self.square_integral(|u| Ok(self.w_rbc(u)))?;
        let k_conventional = self.w_square_integral()?;
        Ok(ConstantsReport {
            kernel: self.kernel,
            p: self.p,
            region: self.region,
            c: self.c,
            c_lp,
            q,
            k_plp,
            k_mplp,
            k_rbc,
            k_conventional,
            length_ratio: (k_mplp / k_rbc).sqrt(),
        })
    }
}

pub fn equivalent_kernel(kernel: Kernel, p: usize, region: Region, u: f64) -> Result<f64> {
    Ok(EquivalentKernels::new(kernel, p, region)?.w(u))
}

pub fn convolution_kernel(kernel: Kernel, p: usize, region: Region, u: f64) -> Result<f64> {
    EquivalentKernels::new(kernel, p, region)?.conv(u)
}

pub fn kernel_constants(kernel: Kernel, p: usize, region: Region) -> Result<ConstantsReport> {
    EquivalentKernels::new(kernel, p, region)?.constants()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_local_linear_is_the_kernel() {
        for k in Kernel::ALL {
            let e = EquivalentKernels::new(k, 1, Region::Interior).unwrap();
            for u in [-0.9, -0.3, 0.0, 0.45, 0.99] {
                assert!((e.w(u) - k.eval(u)).abs() < 1e-12, "{k} {u}");
            }
        }
    }

    #[test]
    fn epanechnikov_reference_values() {
        let e = EquivalentKernels::new(Kernel::Epanechnikov, 1, Region::Interior).unwrap();
        assert!((e.c() - 0.2).abs() < 1e-12);
        assert!((e.w_conv(0.0).unwrap() - 0.6).abs() < 1e-10);
        assert!((e.q().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_kernel_has_unit_mass() {
        let e = EquivalentKernels::new(Kernel::Epanechnikov, 1, Region::Boundary).unwrap();
        let m = integrate(|u| e.w(u), 0.0, 1.0, &[], 1e-12).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        let m = integrate(|u| e.w_bnd(u, 0.0).unwrap(), 0.0, 1.0, &[], 1e-12).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        // s >= 1 recovers the interior kernel
        let i = EquivalentKernels::new(Kernel::Epanechnikov, 1, Region::Interior).unwrap();
        assert!((e.w_bnd(-0.4, 3.0).unwrap() - i.w(-0.4)).abs() < 1e-12);
    }

    #[test]
    fn display_rounding() {
        assert_eq!(round_display(1.125), 1.13);
        assert_eq!(round_display(0.835), 0.84);
        assert_eq!(round_display(-0.105), -0.11);
        assert_eq!(round_display(10.2857), 10.29);
    }

    #[test]
    fn even_order_rejected() {
        assert!(EquivalentKernels::new(Kernel::Uniform, 2, Region::Interior).is_err());
    }
}
