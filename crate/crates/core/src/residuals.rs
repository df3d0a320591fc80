//! Bias-corrected heteroskedasticity-robust residuals.
//!
//! The base residual is the deviation from the order-`p+1` local polynomial
//! fitted at the evaluation point, extended globally:
//! `e_i = y_i - r_{p+1}(x_i - x0)' beta_{p+1}`. Leverages come from the same
//! kernel-weighted regression and vanish outside the kernel window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locpoly::{FitConfig, LocalDesign, LocalSolve, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HcType {
    Hc0,
    Hc1,
    Hc2,
    #[default]
    Hc3,
}

impl fmt::Display for HcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HcType::Hc0 => "hc0",
            HcType::Hc1 => "hc1",
            HcType::Hc2 => "hc2",
            HcType::Hc3 => "hc3",
        })
    }
}

impl FromStr for HcType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc0" => Ok(HcType::Hc0),
            "hc1" => Ok(HcType::Hc1),
            "hc2" => Ok(HcType::Hc2),
            "hc3" => Ok(HcType::Hc3),
            other => Err(Error::InvalidConfig(format!(
                "unknown residual type `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector {
    pub values: Vec<f64>,
    pub hc_order: HcType,
    pub leverages: Vec<f64>,
}

/// Leverages at or above `1 - LEVERAGE_GUARD` are rejected.
const LEVERAGE_GUARD: f64 = 1e-12;

/// Residuals over every sorted position of the design.
#[derive(Debug, Clone)]
pub(crate) struct SortedResiduals {
    pub values: Vec<f64>,
    pub leverages: Vec<f64>,
}

pub(crate) fn sorted_residuals(
    design: &LocalDesign,
    pilot: &LocalSolve,
    hc: HcType,
) -> Result<SortedResiduals> {
    let cfg = design.config();
    let h = cfg.bandwidth;
    let ys_window = &design.ys()[pilot.range.clone()];
    let coef = pilot.coefficients(ys_window);
    let xs = design.xs();
    let ys = design.ys();
    let mut values: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let u = (x - cfg.point) / h;
            let fitted = coef.iter().rev().fold(0.0, |acc, c| acc * u + c);
            y - fitted
        })
        .collect();
    let mut leverages = vec![0.0; xs.len()];
    for (pos, l) in pilot.range.clone().zip(pilot.leverages()) {
        leverages[pos] = l;
    }
    let n_eff = pilot.len();
    let k = pilot.order + 1;
    let first_in_window = design.original_index()[pilot.range.start];
    match hc {
        HcType::Hc0 => {}
        HcType::Hc1 => {
            if n_eff <= k {
                return Err(Error::LeverageOne {
                    index: first_in_window,
                    leverage: 1.0,
                });
            }
            let factor = (n_eff as f64 / (n_eff - k) as f64).sqrt();
            values.iter_mut().for_each(|v| *v *= factor);
        }
        HcType::Hc2 | HcType::Hc3 => {
            for pos in pilot.range.clone() {
                let l = leverages[pos];
                if l >= 1.0 - LEVERAGE_GUARD {
                    return Err(Error::LeverageOne {
                        index: design.original_index()[pos],
                        leverage: l,
                    });
                }
                values[pos] /= if hc == HcType::Hc2 {
                    (1.0 - l).sqrt()
                } else {
                    1.0 - l
                };
            }
        }
    }
    Ok(SortedResiduals { values, leverages })
}

/// Bias-corrected HC residuals `tilde eps_i` for the configuration's fit.
pub fn bc_residuals(sample: &Sample, config: &FitConfig, hc: HcType) -> Result<ResidualVector> {
    let design = LocalDesign::new(sample, config)?;
    let pilot = design.solve(config.point, config.order + 1)?;
    let r = sorted_residuals(&design, &pilot, hc)?;
    let all = 0..design.xs().len();
    Ok(ResidualVector {
        values: design.scatter(all.clone(), &r.values),
        hc_order: hc,
        leverages: design.scatter(all, &r.leverages),
    })
}
