//! Local polynomial design algebra.
//!
//! All fits are solved in scaled coordinates `u_i = (x_i - x0) / h` through a
//! Householder QR of the kernel-weighted design `diag(sqrt K) Z`. Points with
//! zero kernel weight never enter a factorization.

use std::fmt;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Singular values of the scaled design below this fraction of the largest
/// one mark the local design as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Which observations a fit may use, relative to the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Both,
    /// Observations with `x_i >= point`.
    RightOfCutoff,
    /// Observations with `x_i < point`.
    LeftOfCutoff,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Both => "both",
            Side::RightOfCutoff => "right",
            Side::LeftOfCutoff => "left",
        })
    }
}

/// Regressor/outcome pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidSample(format!(
                "x has {} entries but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        if let Some(i) = x
            .iter()
            .zip(&y)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidSample(format!(
                "non-finite value at observation {i}"
            )));
        }
        Ok(Sample { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Same regressors, new outcomes.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Sample> {
        Sample::new(self.x.clone(), y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub point: f64,
    pub bandwidth: f64,
    /// Polynomial order `p`, odd.
    pub order: usize,
    pub kernel: Kernel,
    pub side: Side,
}

impl FitConfig {
    pub fn new(point: f64, bandwidth: f64, order: usize, kernel: Kernel) -> Result<Self> {
        let cfg = FitConfig {
            point,
            bandwidth,
            order,
            kernel,
            side: Side::Both,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.point.is_finite() {
            return Err(Error::InvalidConfig(
                "evaluation point must be finite".into(),
            ));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if self.order.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "polynomial order must be odd, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Local polynomial weights `w_i(x0)` aligned with the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    /// Observations with nonzero kernel weight.
    pub effective_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    /// Coefficients of `(x - x0)^j`, `j = 0..=order`.
    pub beta: Vec<f64>,
    pub ghat: f64,
    pub weights: WeightVector,
    /// `C_n(x0)`.
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFactor {
    pub q: f64,
    pub c_n: f64,
    pub c_lp: f64,
}

/// Sorted, side-filtered view of a sample for one fit configuration.
#[derive(Debug, Clone)]
pub struct LocalDesign {
    xs: Vec<f64>,
    ys: Vec<f64>,
    idx: Vec<usize>,
    n: usize,
    config: FitConfig,
}

/// A solved kernel-weighted least-squares problem around `center`.
///
/// `coef_weights` is the `(order+1) x m` matrix `(Z'KZ)^{-1} Z'K` in scaled
/// coordinates, row-major, so scaled coefficients are `coef_weights * y`.
#[derive(Debug, Clone)]
pub(crate) struct LocalSolve {
    pub range: Range<usize>,
    pub order: usize,
    pub u: Vec<f64>,
    coef_weights: Vec<f64>,
}

impl LocalSolve {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    /// Row `k` of `(Z'KZ)^{-1} Z'K`; times `nh` this is the weight vector of
    /// the `k`-th scaled coefficient.
    pub fn coef_row(&self, k: usize) -> &[f64] {
        let m = self.len();
        &self.coef_weights[k * m..(k + 1) * m]
    }

    /// Scaled coefficients (coefficient of `u^k`).
    pub fn coefficients(&self, ys: &[f64]) -> Vec<f64> {
        (0..=self.order)
            .map(|k| self.coef_row(k).iter().zip(ys).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `C_n(center) = (nh)^{-1} sum w_i u_i^{order+1}`.
    pub fn curvature(&self) -> f64 {
        let e = self.order as i32 + 1;
        self.coef_row(0)
            .iter()
            .zip(&self.u)
            .map(|(l, u)| l * u.powi(e))
            .sum()
    }

    /// Hat-matrix diagonal of the kernel-weighted regression.
    pub fn leverages(&self) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut acc = 0.0;
                let mut pw = 1.0;
                for k in 0..=self.order {
                    acc += self.coef_weights[k * m + i] * pw;
                    pw *= self.u[i];
                }
                acc
            })
            .collect()
    }
}

/// Sparse weights over a contiguous range of the sorted design.
#[derive(Debug, Clone)]
pub(crate) struct LpBc {
    pub range: Range<usize>,
    /// `w_LP-bc,i(x0)` over `range`.
    pub weights: Vec<f64>,
    /// `(nh)^{-1} sum_j w_j(x0) ghat(x_j)`.
    pub smoothed_mean: f64,
    pub c_lp: f64,
}

impl LocalDesign {
    pub fn new(sample: &Sample, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let keep = |x: f64| match config.side {
            Side::Both => true,
            Side::RightOfCutoff => x >= config.point,
            Side::LeftOfCutoff => x < config.point,
        };
        let mut idx: Vec<usize> = (0..sample.len()).filter(|&i| keep(sample.x[i])).collect();
        idx.sort_by(|&a, &b| sample.x[a].total_cmp(&sample.x[b]).then(a.cmp(&b)));
        let xs = idx.iter().map(|&i| sample.x[i]).collect();
        let ys = idx.iter().map(|&i| sample.y[i]).collect();
        Ok(LocalDesign {
            xs,
            ys,
            idx,
            n: sample.len(),
            config: *config,
        })
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    /// Normalizing sample size (all observations, both sides).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nh(&self) -> f64 {
        self.n as f64 * self.config.bandwidth
    }

    pub(crate) fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Original sample index of each sorted position.
    pub(crate) fn original_index(&self) -> &[usize] {
        &self.idx
    }

    /// Sorted positions with `|x - center| / h < 1`.
    pub(crate) fn window(&self, center: f64) -> Range<usize> {
        let h = self.config.bandwidth;
        let start = self.xs.partition_point(|&x| (x - center) / h <= -1.0);
        let end = self.xs.partition_point(|&x| (x - center) / h < 1.0);
        start..end.max(start)
    }

    pub(crate) fn solve(&self, center: f64, order: usize) -> Result<LocalSolve> {
        let h = self.config.bandwidth;
        let kernel = self.config.kernel;
        let range = self.window(center);
        let xs = &self.xs[range.clone()];
        let k = order + 1;
        let m = xs.len();
        let distinct = if m == 0 {
            0
        } else {
            1 + xs.windows(2).filter(|w| w[1] != w[0]).count()
        };
        let insufficient = || Error::InsufficientLocalData {
            point: center,
            in_window: m,
            distinct,
            needed: k,
        };
        if m < k || distinct < k {
            return Err(insufficient());
        }
        let u: Vec<f64> = xs.iter().map(|&x| (x - center) / h).collect();
        let sk: Vec<f64> = u.iter().map(|&v| kernel.eval(v).sqrt()).collect();
        let a = DMatrix::from_fn(m, k, |i, j| sk[i] * u[i].powi(j as i32));
        let qr = a.qr();
        let r = qr.r();
        let sv = r.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if !(smax > 0.0) || smin < RANK_TOLERANCE * smax {
            return Err(insufficient());
        }
        let rinv = r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(insufficient)?;
        let q = qr.q();
        // L = R^{-1} Q' diag(sqrt K)
        let l = rinv * q.transpose();
        let mut coef_weights = vec![0.0; k * m];
        for row in 0..k {
            for i in 0..m {
                coef_weights[row * m + i] = l[(row, i)] * sk[i];
            }
        }
        Ok(LocalSolve {
            range,
            order,
            u,
            coef_weights,
        })
    }

    /// Order-`p` fit at the evaluation point.
    pub(crate) fn solve_at_point(&self) -> Result<LocalSolve> {
        self.solve(self.config.point, self.config.order)
    }

    /// Double-smoothing bias weights and `C_LP,n` from the order-`p` fit at
    /// the evaluation point.
    pub(crate) fn lp_bc(&self, base: &LocalSolve) -> Result<LpBc> {
        let nh = self.nh();
        let order = self.config.order;
        let w0 = base.coef_row(0);
        if base.range.is_empty() {
            return Err(Error::InsufficientLocalData {
                point: self.config.point,
                in_window: 0,
                distinct: 0,
                needed: order + 1,
            });
        }
        let first = self.window(self.xs[base.range.start]);
        let last = self.window(self.xs[base.range.end - 1]);
        let range = first.start.min(base.range.start)..last.end.max(base.range.end);
        let mut weights = vec![0.0; range.len()];
        for (pos, l) in base.range.clone().zip(w0) {
            weights[pos - range.start] = -nh * l;
        }
        let mut smoothed_mean = 0.0;
        let mut c_lp = 0.0;
        for (pos, &l0) in base.range.clone().zip(w0) {
            // w_j(x0) / (nh) = l0
            let inner = self.solve(self.xs[pos], order)?;
            let row = inner.coef_row(0);
            let mut ghat_j = 0.0;
            for (ipos, &li) in inner.range.clone().zip(row) {
                weights[ipos - range.start] += nh * l0 * li;
                ghat_j += li * self.ys[ipos];
            }
            smoothed_mean += l0 * ghat_j;
            c_lp += l0 * inner.curvature();
        }
        Ok(LpBc {
            range,
            weights,
            smoothed_mean,
            c_lp,
        })
    }

    /// Scatters sparse values over `range` into a vector aligned with the
    /// original sample.
    pub(crate) fn scatter(&self, range: Range<usize>, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (pos, v) in range.zip(values) {
            out[self.idx[pos]] = *v;
        }
        out
    }
}

/// Degenerate-scaling guard for `Q_n = C_n / C_LP,n`.
pub(crate) fn q_from_constants(c_n: f64, c_lp: f64) -> Result<QFactor> {
    if !(c_lp.abs() >= 1e-12 * c_n.abs()) || c_lp == 0.0 {
        return Err(Error::DegenerateScaling { c_n, c_lp });
    }
    Ok(QFactor {
        q: c_n / c_lp,
        c_n,
        c_lp,
    })
}

pub fn local_weights(sample: &Sample, config: &FitConfig) -> Result<WeightVector> {
    let design = LocalDesign::new(sample, config)?;
    let fit = design.solve_at_point()?;
    let nh = design.nh();
    let w: Vec<f64> = fit.coef_row(0).iter().map(|l| nh * l).collect();
    Ok(WeightVector {
        values: design.scatter(fit.range.clone(), &w),
        effective_n: fit.len(),
    })
}

/// Kernel-weighted least-squares fit of order `config.order` at `config.point`.
pub fn local_fit(sample: &Sample, config: &FitConfig) -> Result<LocalFit> {
    local_fit_with_order(sample, config, config.order)
}

/// As [`local_fit`] with an explicit order (used for the order `p + 1`
/// pilot fit); `curvature` is then `C_n` for that order.
pub fn local_fit_with_order(sample: &Sample, config: &FitConfig, order: usize) -> Result<LocalFit> {
    let design = LocalDesign::new(sample, config)?;
    let fit = design.solve(config.point, order)?;
    let ys = &design.ys()[fit.range.clone()];
    let h = config.bandwidth;
    let beta: Vec<f64> = fit
        .coefficients(ys)
        .into_iter()
        .enumerate()
        .map(|(j, b)| b / h.powi(j as i32))
        .collect();
    let nh = design.nh();
    let w: Vec<f64> = fit.coef_row(0).iter().map(|l| nh * l).collect();
    Ok(LocalFit {
        ghat: beta[0],
        beta,
        curvature: fit.curvature(),
        weights: WeightVector {
            values: design.scatter(fit.range.clone(), &w),
            effective_n: fit.len(),
        },
    })
}

/// `C_n(x0) = (nh)^{-1} sum_i w_i(x0) ((x_i - x0)/h)^{p+1}`.
pub fn curvature_constant(sample: &Sample, config: &FitConfig) -> Result<f64> {
    let design = LocalDesign::new(sample, config)?;
    Ok(design.solve_at_point()?.curvature())
}

/// `w_LP-bc,i(x0) = (nh)^{-1} sum_j w_j(x0) w_i(x_j) - w_i(x0)`, aligned
/// with the sample (zero beyond `2h`).
pub fn lp_bc_weights(sample: &Sample, config: &FitConfig) -> Result<Vec<f64>> {
    let design = LocalDesign::new(sample, config)?;
    let base = design.solve_at_point()?;
    let bc = design.lp_bc(&base)?;
    Ok(design.scatter(bc.range.clone(), &bc.weights))
}

/// `Q_n = C_n / C_LP,n` with `C_LP,n = (nh)^{-1} sum_i w_i(x0) C_n(x_i)`.
pub fn q_factor(sample: &Sample, config: &FitConfig) -> Result<QFactor> {
    let design = LocalDesign::new(sample, config)?;
    let base = design.solve_at_point()?;
    let bc = design.lp_bc(&base)?;
    q_from_constants(base.curvature(), bc.c_lp)
}
