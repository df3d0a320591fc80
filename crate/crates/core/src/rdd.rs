//! Sharp regression discontinuity at a known cutoff.
//!
//! Each side is an ordinary one-sided fit at the cutoff (`K_+ = K 1{x >= c}`,
//! `K_- = K 1{x < c}`), normalized by the full sample size. Side statistics
//! are combined as `T_+ - T_-` on the scale `nh = n sqrt(h_+ h_-)`.

use serde::{Deserialize, Serialize};

use crate::bootmoments::{BootMethod, BootstrapMoments, PointAnalysis};
use crate::error::{Error, Result};
use crate::intervals::{self, CiMethod, ConfidenceInterval, ResamplingPlan};
use crate::kernels::Kernel;
use crate::locpoly::{FitConfig, Sample, Side};
use crate::residuals::HcType;

#[derive(Debug, Clone, PartialEq)]
pub struct RddSample {
    sample: Sample,
    cutoff: f64,
}

impl RddSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, cutoff: f64) -> Result<Self> {
        if !cutoff.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cutoff must be finite, got {cutoff}"
            )));
        }
        Ok(RddSample {
            sample: Sample::new(x, y)?,
            cutoff,
        })
    }

    /// As [`RddSample::new`], checking a supplied treatment column against
    /// `1{x >= cutoff}`.
    pub fn with_treatment(x: Vec<f64>, y: Vec<f64>, d: &[f64], cutoff: f64) -> Result<Self> {
        if d.len() != x.len() {
            return Err(Error::InvalidSample(format!(
                "treatment column has {} entries for {} observations",
                d.len(),
                x.len()
            )));
        }
        for (row, (&xi, &di)) in x.iter().zip(d).enumerate() {
            let expected = if xi >= cutoff { 1.0 } else { 0.0 };
            if di != expected {
                return Err(Error::DesignMismatch { row });
            }
        }
        Self::new(x, y, cutoff)
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn treatment(&self) -> Vec<bool> {
        self.sample.x().iter().map(|&x| x >= self.cutoff).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RddConfig {
    pub bandwidth_plus: f64,
    pub bandwidth_minus: f64,
    pub order: usize,
    pub kernel_plus: Kernel,
    pub kernel_minus: Kernel,
}

impl RddConfig {
    /// Shared bandwidth and kernel on both sides.
    pub fn new(bandwidth: f64, order: usize, kernel: Kernel) -> Self {
        RddConfig {
            bandwidth_plus: bandwidth,
            bandwidth_minus: bandwidth,
            order,
            kernel_plus: kernel,
            kernel_minus: kernel,
        }
    }

    pub fn side_config(&self, cutoff: f64, side: Side) -> Result<FitConfig> {
        let (h, k) = match side {
            Side::LeftOfCutoff => (self.bandwidth_minus, self.kernel_minus),
            _ => (self.bandwidth_plus, self.kernel_plus),
        };
        Ok(FitConfig::new(cutoff, h, self.order, k)
            .map_err(|e| e.on_side(side))?
            .with_side(side))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddMoments {
    pub method: BootMethod,
    pub bias_rd: f64,
    pub debiased_sd_rd: f64,
    pub boot_sd_rd: f64,
    /// Side rescaling factors; 1 unless `method` is mlp.
    pub q_plus: f64,
    pub q_minus: f64,
    /// Side moments, already rescaled by their `Q`.
    pub plus: BootstrapMoments,
    pub minus: BootstrapMoments,
    pub nh: f64,
    /// The combined statistic in single-point form, `q = 1`.
    pub combined: BootstrapMoments,
}

/// Both one-sided analyses at the cutoff.
#[derive(Debug, Clone)]
pub struct RddAnalysis {
    plus: PointAnalysis,
    minus: PointAnalysis,
    nh: f64,
}

impl RddAnalysis {
    pub fn new(sample: &RddSample, config: &RddConfig, hc: HcType) -> Result<Self> {
        let side = |s: Side| -> Result<PointAnalysis> {
            let cfg = config.side_config(sample.cutoff, s)?;
            PointAnalysis::new(&sample.sample, &cfg, hc).map_err(|e| e.on_side(s))
        };
        let plus = side(Side::RightOfCutoff)?;
        let minus = side(Side::LeftOfCutoff)?;
        let nh = (plus.nh() * minus.nh()).sqrt();
        Ok(RddAnalysis { plus, minus, nh })
    }

    pub fn plus(&self) -> &PointAnalysis {
        &self.plus
    }

    pub fn minus(&self) -> &PointAnalysis {
        &self.minus
    }

    pub fn nh(&self) -> f64 {
        self.nh
    }

    /// `tau = ghat_+(c) - ghat_-(c)`.
    pub fn estimate(&self) -> f64 {
        self.plus.estimate() - self.minus.estimate()
    }

    pub fn moments(&self, method: BootMethod) -> Result<RddMoments> {
        let plus = self
            .plus
            .moments(method)
            .map_err(|e| e.on_side(Side::RightOfCutoff))?;
        let minus = self
            .minus
            .moments(method)
            .map_err(|e| e.on_side(Side::LeftOfCutoff))?;
        let nh = self.nh;
        let sp = (nh / plus.nh).sqrt();
        let sm = (nh / minus.nh).sqrt();
        let bias = sp * plus.bias - sm * minus.bias;
        let var = sp * sp * plus.debiased_sd.powi(2) + sm * sm * minus.debiased_sd.powi(2);
        let loadings = plus
            .loadings()
            .iter()
            .map(|a| sp * a)
            .chain(minus.loadings().iter().map(|a| -sm * a))
            .collect();
        let combined = BootstrapMoments::new(method, bias, var, 1.0, nh, loadings);
        combined.check_positive(self.plus.y_scale().max(self.minus.y_scale()))?;
        Ok(RddMoments {
            method,
            bias_rd: combined.bias,
            debiased_sd_rd: combined.debiased_sd,
            boot_sd_rd: combined.boot_sd,
            q_plus: plus.q,
            q_minus: minus.q,
            plus,
            minus,
            nh,
            combined,
        })
    }

    /// Interval of the requested kind at the cutoff, analytic unless a
    /// resampling plan is given.
    pub fn ci(
        &self,
        method: CiMethod,
        alpha: f64,
        plan: Option<&ResamplingPlan>,
    ) -> Result<ConfidenceInterval> {
        intervals::build_ci(
            self.estimate(),
            |m| self.moments(m).map(|r| r.combined),
            method,
            alpha,
            plan,
        )
    }
}

pub fn ate_estimate(sample: &RddSample, config: &RddConfig) -> Result<f64> {
    let side = |s: Side| -> Result<f64> {
        let cfg = config.side_config(sample.cutoff, s)?;
        crate::locpoly::local_fit(&sample.sample, &cfg)
            .map(|f| f.ghat)
            .map_err(|e| e.on_side(s))
    };
    Ok(side(Side::RightOfCutoff)? - side(Side::LeftOfCutoff)?)
}

/// Modified local polynomial moments at the cutoff.
pub fn rdd_moments(sample: &RddSample, config: &RddConfig, hc: HcType) -> Result<RddMoments> {
    RddAnalysis::new(sample, config, hc)?.moments(BootMethod::Mlp)
}

/// The analytic modified prepivoted interval at the cutoff.
pub fn rdd_ci(
    sample: &RddSample,
    config: &RddConfig,
    hc: HcType,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    RddAnalysis::new(sample, config, hc)?.ci(CiMethod::Mplp, alpha, None)
}
