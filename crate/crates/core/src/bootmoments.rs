//! Closed-form moments of the fixed-design wild bootstrap statistics.
//!
//! For every scheme the bootstrap statistic is affine in the multipliers,
//! `T* = B + sum_i a_i e_i*`, so its mean and variance follow from the
//! weights and residuals without resampling. The loadings `a_i` are kept
//! for the explicit resampling path in [`crate::intervals`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locpoly::{q_from_constants, FitConfig, LocalDesign, LocalSolve, LpBc, QFactor, Sample};
use crate::residuals::{sorted_residuals, HcType, SortedResiduals};

/// Variances below this multiple of the squared outcome scale are zero.
pub const DEGENERATE_VARIANCE_RATIO: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootMethod {
    /// Global polynomial: order `p+1` fit at the point, evaluated everywhere.
    Gp,
    /// Local polynomial: order `p` fit evaluated at each regressor.
    Lp,
    /// Local polynomial rescaled by `Q_n`.
    Mlp,
}

impl fmt::Display for BootMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BootMethod::Gp => "gp",
            BootMethod::Lp => "lp",
            BootMethod::Mlp => "mlp",
        })
    }
}

impl FromStr for BootMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(BootMethod::Gp),
            "lp" => Ok(BootMethod::Lp),
            "mlp" => Ok(BootMethod::Mlp),
            other => Err(Error::InvalidConfig(format!(
                "unknown bootstrap scheme `{other}`"
            ))),
        }
    }
}

/// Mean and spread of `T* = sqrt(nh) (ghat* - center)` and the standard
/// deviation of the debiased statistic `T_n - bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapMoments {
    pub method: BootMethod,
    pub bias: f64,
    pub boot_sd: f64,
    pub debiased_sd: f64,
    /// 1 for gp/lp, `Q_n` for mlp.
    pub q: f64,
    pub nh: f64,
    #[serde(skip)]
    loadings: Vec<f64>,
}

impl BootstrapMoments {
    pub(crate) fn new(
        method: BootMethod,
        bias: f64,
        debiased_var: f64,
        q: f64,
        nh: f64,
        loadings: Vec<f64>,
    ) -> Self {
        let boot_var: f64 = loadings.iter().map(|a| a * a).sum();
        BootstrapMoments {
            method,
            bias,
            boot_sd: boot_var.sqrt(),
            debiased_sd: debiased_var.max(0.0).sqrt(),
            q,
            nh,
            loadings,
        }
    }

    /// Coefficients `a_i` of the multipliers in `T* = bias + sum_i a_i e_i*`.
    pub fn loadings(&self) -> &[f64] {
        &self.loadings
    }

    /// `m = debiased_sd / boot_sd`, the prepivoting scale.
    pub fn m_hat(&self) -> f64 {
        self.debiased_sd / self.boot_sd
    }

    pub(crate) fn check_positive(&self, scale: f64) -> Result<()> {
        let floor = DEGENERATE_VARIANCE_RATIO * scale * scale;
        for v in [
            self.boot_sd * self.boot_sd,
            self.debiased_sd * self.debiased_sd,
        ] {
            if !(v > floor) {
                return Err(Error::DegenerateVariance { variance: v });
            }
        }
        Ok(())
    }
}

/// Everything shared by the three bootstrap schemes at one point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    design: LocalDesign,
    base: LocalSolve,
    pilot: LocalSolve,
    residuals: SortedResiduals,
    lp: std::result::Result<LpBc, Error>,
    hc: HcType,
    y_scale: f64,
}

impl PointAnalysis {
    pub fn new(sample: &Sample, config: &FitConfig, hc: HcType) -> Result<Self> {
        let design = LocalDesign::new(sample, config)?;
        let base = design.solve_at_point()?;
        let pilot = design.solve(config.point, config.order + 1)?;
        let residuals = sorted_residuals(&design, &pilot, hc)?;
        let lp = design.lp_bc(&base);
        let y_scale = design.ys().iter().fold(0.0_f64, |m, y| m.max(y.abs()));
        Ok(PointAnalysis {
            design,
            base,
            pilot,
            residuals,
            lp,
            hc,
            y_scale,
        })
    }

    pub fn config(&self) -> &FitConfig {
        self.design.config()
    }

    pub fn hc(&self) -> HcType {
        self.hc
    }

    pub fn nh(&self) -> f64 {
        self.design.nh()
    }

    pub fn effective_n(&self) -> usize {
        self.base.len()
    }

    /// Largest `|y_i|` among the observations the fit may use.
    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    /// `ghat_n(x0)`.
    pub fn estimate(&self) -> f64 {
        let ys = &self.design.ys()[self.base.range.clone()];
        self.base
            .coef_row(0)
            .iter()
            .zip(ys)
            .map(|(l, y)| l * y)
            .sum()
    }

    /// `C_n(x0)`.
    pub fn curvature(&self) -> f64 {
        self.base.curvature()
    }

    fn lp_parts(&self) -> Result<&LpBc> {
        self.lp.as_ref().map_err(Clone::clone)
    }

    pub fn q_factor(&self) -> Result<QFactor> {
        q_from_constants(self.curvature(), self.lp_parts()?.c_lp)
    }

    /// `(nh)^{-1/2} w_i(x0) eps_i` over the base window.
    fn base_loadings(&self) -> Vec<f64> {
        let s = self.nh().sqrt();
        self.base
            .range
            .clone()
            .zip(self.base.coef_row(0))
            .map(|(pos, l)| s * l * self.residuals.values[pos])
            .collect()
    }

    /// Pilot order-`p+1` scaled coefficients.
    fn pilot_coefficients(&self) -> Vec<f64> {
        self.pilot
            .coefficients(&self.design.ys()[self.pilot.range.clone()])
    }

    /// `w_GP-bc,i(x0)` over the pilot window.
    fn gp_bc_weights(&self) -> Vec<f64> {
        let nh = self.nh();
        let c = self.curvature();
        let p1 = self.config().order + 1;
        self.pilot.coef_row(p1).iter().map(|l| c * nh * l).collect()
    }

    /// Gp bias `sqrt(nh h^{2p+3}) ghat^{(p+1)}(x0) C_n / (p+1)!`.
    pub fn gp(&self) -> Result<BootstrapMoments> {
        let nh = self.nh();
        let beta = self.pilot_coefficients();
        let bias = nh.sqrt() * beta[self.config().order + 1] * self.curvature();
        // base and pilot share the same kernel window
        let w_bc = self.gp_bc_weights();
        let var: f64 = self
            .base
            .range
            .clone()
            .zip(self.base.coef_row(0))
            .zip(&w_bc)
            .map(|((pos, l), bc)| {
                let d = nh * l - bc;
                d * d * self.residuals.values[pos].powi(2)
            })
            .sum::<f64>()
            / nh;
        let m = BootstrapMoments::new(BootMethod::Gp, bias, var, 1.0, nh, self.base_loadings());
        m.check_positive(self.y_scale)?;
        Ok(m)
    }

    /// The textbook bias-corrected estimate through the weight route
    /// `(nh)^{-1/2} sum_i w_GP-bc,i y_i`; algebraically equal to the gp bias.
    pub fn rbc_bias_from_weights(&self) -> f64 {
        let ys = &self.design.ys()[self.pilot.range.clone()];
        self.gp_bc_weights()
            .iter()
            .zip(ys)
            .map(|(w, y)| w * y)
            .sum::<f64>()
            / self.nh().sqrt()
    }

    fn lp_like(&self, method: BootMethod, q: f64) -> Result<BootstrapMoments> {
        let nh = self.nh();
        let bc = self.lp_parts()?;
        let ys = self.design.ys();
        let lp_bias: f64 = bc
            .range
            .clone()
            .zip(&bc.weights)
            .map(|(pos, w)| w * ys[pos])
            .sum::<f64>()
            / nh.sqrt();
        let mut w = vec![0.0; bc.range.len()];
        for (pos, l) in self.base.range.clone().zip(self.base.coef_row(0)) {
            w[pos - bc.range.start] = nh * l;
        }
        let var: f64 = bc
            .range
            .clone()
            .zip(w.iter().zip(&bc.weights))
            .map(|(pos, (wi, bci))| {
                let d = wi - q * bci;
                d * d * self.residuals.values[pos].powi(2)
            })
            .sum::<f64>()
            / nh;
        let loadings = self.base_loadings().into_iter().map(|a| q * a).collect();
        let m = BootstrapMoments::new(method, q * lp_bias, var, q, nh, loadings);
        m.check_positive(self.y_scale)?;
        Ok(m)
    }

    /// Lp bias `(nh)^{-1/2} sum_i w_LP-bc,i y_i`.
    pub fn lp(&self) -> Result<BootstrapMoments> {
        self.lp_like(BootMethod::Lp, 1.0)
    }

    /// The same lp bias through the double-smoothing route
    /// `sqrt(nh) ((nh)^{-1} sum_j w_j ghat(x_j) - ghat(x0))`.
    pub fn lp_bias_from_smoothed_fit(&self) -> Result<f64> {
        Ok(self.nh().sqrt() * (self.lp_parts()?.smoothed_mean - self.estimate()))
    }

    pub fn mlp(&self) -> Result<BootstrapMoments> {
        let q = self.q_factor()?;
        self.lp_like(BootMethod::Mlp, q.q)
    }

    pub fn moments(&self, method: BootMethod) -> Result<BootstrapMoments> {
        match method {
            BootMethod::Gp => self.gp(),
            BootMethod::Lp => self.lp(),
            BootMethod::Mlp => self.mlp(),
        }
    }
}

pub fn gp_moments(sample: &Sample, config: &FitConfig, hc: HcType) -> Result<BootstrapMoments> {
    PointAnalysis::new(sample, config, hc)?.gp()
}

pub fn lp_moments(sample: &Sample, config: &FitConfig, hc: HcType) -> Result<BootstrapMoments> {
    PointAnalysis::new(sample, config, hc)?.lp()
}

pub fn mlp_moments(sample: &Sample, config: &FitConfig, hc: HcType) -> Result<BootstrapMoments> {
    PointAnalysis::new(sample, config, hc)?.mlp()
}
