//! Conventional, naive bootstrap and prepivoted confidence intervals.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bootmoments::{BootMethod, BootstrapMoments, PointAnalysis};
use crate::error::{Error, Result};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Conventional,
    NaiveGp,
    NaiveLp,
    RbcPgp,
    Plp,
    Mplp,
}

impl CiMethod {
    pub const ALL: [CiMethod; 6] = [
        CiMethod::Conventional,
        CiMethod::NaiveGp,
        CiMethod::NaiveLp,
        CiMethod::RbcPgp,
        CiMethod::Plp,
        CiMethod::Mplp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Conventional => "conventional",
            CiMethod::NaiveGp => "naive_gp",
            CiMethod::NaiveLp => "naive_lp",
            CiMethod::RbcPgp => "rbc_pgp",
            CiMethod::Plp => "plp",
            CiMethod::Mplp => "mplp",
        }
    }

    /// Bootstrap scheme whose moments build this interval.
    pub fn scheme(self) -> BootMethod {
        match self {
            CiMethod::Conventional | CiMethod::NaiveGp | CiMethod::RbcPgp => BootMethod::Gp,
            CiMethod::NaiveLp | CiMethod::Plp => BootMethod::Lp,
            CiMethod::Mplp => BootMethod::Mlp,
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CiMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown interval method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiWarning {
    /// One bootstrap draw: both quantiles are the same value.
    SingleDraw,
    /// `C_LP,n` vanished, so the plp interval stands in for mplp.
    DegenerateScalingFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    /// `(nh)^{-1/2} B`.
    pub bias_correction: f64,
    /// `(nh)^{-1/2}` times the standard deviation used for the width.
    pub se: f64,
    pub alpha: f64,
    pub method: CiMethod,
    pub warnings: Vec<CiWarning>,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn symmetric(
    estimate: f64,
    bias_correction: f64,
    se: f64,
    alpha: f64,
    method: CiMethod,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let half = normal::quantile(1.0 - alpha / 2.0)? * se;
    let center = estimate - bias_correction;
    Ok(ConfidenceInterval {
        lower: center - half,
        upper: center + half,
        estimate,
        bias_correction,
        se,
        alpha,
        method,
        warnings: Vec::new(),
    })
}

/// `[ghat +- z_{1-alpha/2} (nh)^{-1/2} v1]`.
pub fn conventional_ci(
    estimate: f64,
    sd_v1: f64,
    nh: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    if !(sd_v1 > 0.0 && nh > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "need sd > 0 and nh > 0, got {sd_v1} and {nh}"
        )));
    }
    symmetric(
        estimate,
        0.0,
        sd_v1 / nh.sqrt(),
        alpha,
        CiMethod::Conventional,
    )
}

/// Textbook robust bias-corrected interval from its bias and standard deviation.
pub fn rbc_ci(
    estimate: f64,
    bias: f64,
    sd: f64,
    nh: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let s = nh.sqrt();
    symmetric(estimate, bias / s, sd / s, alpha, CiMethod::RbcPgp)
}

/// `H(u) = Phi(Phi^{-1}(u) / m)`.
pub fn prepivot_cdf_apply(m_hat: f64, u: f64) -> Result<f64> {
    check_m(m_hat)?;
    Ok(normal::cdf(normal::quantile(u)? / m_hat))
}

/// `H^{-1}(a) = Phi(m z_a)`.
pub fn prepivot_cdf_inverse(m_hat: f64, a: f64) -> Result<f64> {
    check_m(m_hat)?;
    Ok(normal::cdf(m_hat * normal::quantile(a)?))
}

fn check_m(m_hat: f64) -> Result<()> {
    if m_hat > 0.0 && m_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "prepivot scale must be positive, got {m_hat}"
        )))
    }
}

fn prepivot_method(method: BootMethod) -> CiMethod {
    match method {
        BootMethod::Gp => CiMethod::RbcPgp,
        BootMethod::Lp => CiMethod::Plp,
        BootMethod::Mlp => CiMethod::Mplp,
    }
}

fn naive_method(method: BootMethod) -> Result<CiMethod> {
    match method {
        BootMethod::Gp => Ok(CiMethod::NaiveGp),
        BootMethod::Lp => Ok(CiMethod::NaiveLp),
        BootMethod::Mlp => Err(Error::InvalidConfig(
            "naive intervals use gp or lp moments".into(),
        )),
    }
}

/// Prepivoted interval under the Gaussian bootstrap law.
pub fn analytic_prepivot_ci(
    estimate: f64,
    moments: &BootstrapMoments,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let s = moments.nh.sqrt();
    symmetric(
        estimate,
        moments.bias / s,
        moments.debiased_sd / s,
        alpha,
        prepivot_method(moments.method),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplier {
    #[default]
    Gaussian,
    Rademacher,
    Mammen,
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplier::Gaussian => "gaussian",
            Multiplier::Rademacher => "rademacher",
            Multiplier::Mammen => "mammen",
        })
    }
}

impl FromStr for Multiplier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Multiplier::Gaussian),
            "rademacher" => Ok(Multiplier::Rademacher),
            "mammen" => Ok(Multiplier::Mammen),
            other => Err(Error::InvalidConfig(format!(
                "unknown multiplier `{other}`"
            ))),
        }
    }
}

impl Multiplier {
    /// One mean-zero, unit-variance draw.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Multiplier::Gaussian => rng.sample(StandardNormal),
            Multiplier::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Multiplier::Mammen => {
                let s5 = 5f64.sqrt();
                if rng.gen::<f64>() < (s5 + 1.0) / (2.0 * s5) {
                    -(s5 - 1.0) / 2.0
                } else {
                    (s5 + 1.0) / 2.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    pub replications: usize,
    pub multiplier: Multiplier,
    pub seed: u64,
}

impl ResamplingPlan {
    pub fn new(replications: usize, multiplier: Multiplier, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::InvalidConfig(
                "bootstrap replications must be at least 1".into(),
            ));
        }
        Ok(ResamplingPlan {
            replications,
            multiplier,
            seed,
        })
    }

    /// Generator for replication `b`: stream `b` of the seeded ChaCha8.
    pub fn rng(&self, b: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(b);
        rng
    }

    /// Sorted bootstrap draws `T*_b = bias + sum_i a_i e_ib`.
    pub fn draw_statistics(&self, moments: &BootstrapMoments) -> Result<Vec<f64>> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "bootstrap replications must be at least 1".into(),
            ));
        }
        let mut draws: Vec<f64> = (0..self.replications as u64)
            .map(|b| {
                let mut rng = self.rng(b);
                moments.bias
                    + moments
                        .loadings()
                        .iter()
                        .map(|a| a * self.multiplier.draw(&mut rng))
                        .sum::<f64>()
            })
            .collect();
        if draws.iter().any(|t| !t.is_finite()) {
            return Err(Error::RngFailure("non-finite bootstrap statistic".into()));
        }
        draws.sort_by(f64::total_cmp);
        Ok(draws)
    }
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidConfig("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// `[ghat - (nh)^{-1/2} L^{-1}(hi), ghat - (nh)^{-1/2} L^{-1}(lo)]` from draws.
fn from_draws(
    estimate: f64,
    moments: &BootstrapMoments,
    draws: &[f64],
    lo: f64,
    hi: f64,
    alpha: f64,
    method: CiMethod,
    se: f64,
) -> Result<ConfidenceInterval> {
    let s = moments.nh.sqrt();
    let mut warnings = Vec::new();
    if draws.len() == 1 {
        warnings.push(CiWarning::SingleDraw);
    }
    Ok(ConfidenceInterval {
        lower: estimate - quantile_type7(draws, hi)? / s,
        upper: estimate - quantile_type7(draws, lo)? / s,
        estimate,
        bias_correction: moments.bias / s,
        se,
        alpha,
        method,
        warnings,
    })
}

/// Equal-tailed percentile interval of the bootstrap law, Gaussian when no
/// plan is given.
pub fn naive_bootstrap_ci(
    estimate: f64,
    moments: &BootstrapMoments,
    alpha: f64,
    plan: Option<&ResamplingPlan>,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let method = naive_method(moments.method)?;
    let s = moments.nh.sqrt();
    let se = moments.boot_sd / s;
    match plan {
        None => {
            let z_hi = normal::quantile(1.0 - alpha / 2.0)?;
            let z_lo = normal::quantile(alpha / 2.0)?;
            Ok(ConfidenceInterval {
                lower: estimate - (moments.bias + moments.boot_sd * z_hi) / s,
                upper: estimate - (moments.bias + moments.boot_sd * z_lo) / s,
                estimate,
                bias_correction: moments.bias / s,
                se,
                alpha,
                method,
                warnings: Vec::new(),
            })
        }
        Some(plan) => {
            let draws = plan.draw_statistics(moments)?;
            from_draws(
                estimate,
                moments,
                &draws,
                alpha / 2.0,
                1.0 - alpha / 2.0,
                alpha,
                method,
                se,
            )
        }
    }
}

/// Prepivoted interval from explicit bootstrap draws.
pub fn resampled_prepivot_ci(
    estimate: f64,
    moments: &BootstrapMoments,
    alpha: f64,
    plan: &ResamplingPlan,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let m = moments.m_hat();
    let lo = prepivot_cdf_inverse(m, alpha / 2.0)?;
    let hi = prepivot_cdf_inverse(m, 1.0 - alpha / 2.0)?;
    let draws = plan.draw_statistics(moments)?;
    let se = moments.debiased_sd / moments.nh.sqrt();
    from_draws(
        estimate,
        moments,
        &draws,
        lo,
        hi,
        alpha,
        prepivot_method(moments.method),
        se,
    )
}

/// Interval of any kind from a source of bootstrap moments; analytic unless
/// a plan is given. A vanishing `C_LP` turns mplp into plp with a warning.
pub fn build_ci(
    estimate: f64,
    moments: impl Fn(BootMethod) -> Result<BootstrapMoments>,
    method: CiMethod,
    alpha: f64,
    plan: Option<&ResamplingPlan>,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let m = match moments(method.scheme()) {
        Err(e)
            if method == CiMethod::Mplp && matches!(e.root(), Error::DegenerateScaling { .. }) =>
        {
            let mut ci = build_ci(estimate, moments, CiMethod::Plp, alpha, plan)?;
            ci.warnings.push(CiWarning::DegenerateScalingFallback);
            return Ok(ci);
        }
        other => other?,
    };
    match (method, plan) {
        (CiMethod::Conventional, _) => conventional_ci(estimate, m.boot_sd, m.nh, alpha),
        (CiMethod::NaiveGp | CiMethod::NaiveLp, _) => naive_bootstrap_ci(estimate, &m, alpha, plan),
        (_, None) => analytic_prepivot_ci(estimate, &m, alpha),
        (_, Some(p)) => resampled_prepivot_ci(estimate, &m, alpha, p),
    }
}

/// [`build_ci`] at a single evaluation point.
pub fn point_ci(
    analysis: &PointAnalysis,
    method: CiMethod,
    alpha: f64,
    plan: Option<&ResamplingPlan>,
) -> Result<ConfidenceInterval> {
    build_ci(
        analysis.estimate(),
        |m| analysis.moments(m),
        method,
        alpha,
        plan,
    )
}
