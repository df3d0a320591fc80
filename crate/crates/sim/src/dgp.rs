//! Data generating processes and sampling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use npreg_core::{RddSample, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Frequency of the sine in the regression design.
const FREQ: f64 = 1.5 * PI;
/// Noise level in both discontinuity designs.
pub const RDD_SIGMA: f64 = 0.1295;

/// Quintic coefficients, constant term first: (left of 0, right of 0).
const RDD1: ([f64; 6], [f64; 6]) = (
    [3.71, 2.30, 3.28, 1.45, 0.23, 0.03],
    [0.26, 18.49, -54.81, 74.30, -45.02, 9.83],
);
const RDD2: ([f64; 6], [f64; 6]) = (
    [
        0.48,
        1.27,
        -0.5 * 7.18,
        0.7 * 20.21,
        1.1 * 21.54,
        1.5 * 7.33,
    ],
    [0.52, 0.84, -0.1 * 3.00, -0.3 * 7.99, -0.1 * 9.01, 3.56],
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpSpec {
    /// `g(x) = sin(3 pi x / 2) / (1 + 18 x^2 (sign(x) + 1))`, `x ~ U(-1, 1)`, `sigma = 1`.
    Npreg,
    /// Sharp design with cutoff 0, `x ~ 2 Beta(2, 4) - 1`.
    Rdd1,
    Rdd2,
}

impl DgpSpec {
    pub const ALL: [DgpSpec; 3] = [DgpSpec::Npreg, DgpSpec::Rdd1, DgpSpec::Rdd2];

    pub fn name(self) -> &'static str {
        match self {
            DgpSpec::Npreg => "npreg",
            DgpSpec::Rdd1 => "rdd1",
            DgpSpec::Rdd2 => "rdd2",
        }
    }

    pub fn is_rdd(self) -> bool {
        !matches!(self, DgpSpec::Npreg)
    }

    pub fn sigma(self) -> f64 {
        match self {
            DgpSpec::Npreg => 1.0,
            _ => RDD_SIGMA,
        }
    }

    fn quintics(self) -> Option<&'static ([f64; 6], [f64; 6])> {
        match self {
            DgpSpec::Npreg => None,
            DgpSpec::Rdd1 => Some(&RDD1),
            DgpSpec::Rdd2 => Some(&RDD2),
        }
    }

    /// Regression function; for the discontinuity designs the right branch
    /// applies at `x >= 0`.
    pub fn regression(self, x: f64) -> f64 {
        match self.quintics() {
            None => (FREQ * x).sin() / (1.0 + 18.0 * x * x * (sign(x) + 1.0)),
            Some((left, right)) => horner(if x >= 0.0 { right } else { left }, x),
        }
    }

    /// `k`-th derivative of the regression function at `x`. For the
    /// discontinuity designs `right` picks the branch; it is ignored otherwise.
    pub fn derivative(self, x: f64, k: usize, right: bool) -> f64 {
        match self.quintics() {
            None => npreg_derivative(x, k),
            Some((left, r)) => poly_derivative(if right { r } else { left }, x, k),
        }
    }

    /// Density of the regressor.
    pub fn density(self, x: f64) -> f64 {
        if !(-1.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            DgpSpec::Npreg => 0.5,
            _ => {
                let b = 0.5 * (x + 1.0);
                // Beta(2, 4) density 20 b (1 - b)^3, halved by the change of scale
                10.0 * b * (1.0 - b).powi(3)
            }
        }
    }

    /// The estimand: `g(point)`, or the jump at the cutoff 0.
    pub fn true_value(self, point: f64) -> f64 {
        match self.quintics() {
            None => self.regression(point),
            Some((left, right)) => right[0] - left[0],
        }
    }

    pub fn default_kernel(self) -> npreg_core::Kernel {
        match self {
            DgpSpec::Npreg => npreg_core::Kernel::Epanechnikov,
            _ => npreg_core::Kernel::Triangular,
        }
    }
}

impl fmt::Display for DgpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DgpSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        DgpSpec::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| SimError::InvalidConfig(format!("unknown dgp `{s}`")))
    }
}

/// `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn poly_derivative(c: &[f64], x: f64, k: usize) -> f64 {
    let mut d = c.to_vec();
    for _ in 0..k {
        if d.len() <= 1 {
            return 0.0;
        }
        d = d
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, a)| j as f64 * a)
            .collect();
    }
    horner(&d, x)
}

/// Taylor coefficients of `sin(a(x0 + t)) / (1 + c (x0 + t)^2)` divided
/// out term by term, with `c` frozen at its value for `sign(x0)`.
fn npreg_derivative(x0: f64, k: usize) -> f64 {
    let c = 18.0 * (sign(x0) + 1.0);
    let d = [1.0 + c * x0 * x0, 2.0 * c * x0, c];
    let mut q = Vec::with_capacity(k + 1);
    let mut fact = 1.0;
    for j in 0..=k {
        if j > 0 {
            fact *= j as f64;
        }
        let s = FREQ.powi(j as i32) * (FREQ * x0 + j as f64 * PI / 2.0).sin() / fact;
        let mut v = s;
        if j >= 1 {
            v -= d[1] * q[j - 1];
        }
        if j >= 2 {
            v -= d[2] * q[j - 2];
        }
        q.push(v / d[0]);
    }
    q[k] * fact
}

/// One simulated dataset.
#[derive(Debug, Clone)]
pub enum SimSample {
    Regression(Sample),
    Discontinuity(RddSample),
}

impl SimSample {
    pub fn x(&self) -> &[f64] {
        match self {
            SimSample::Regression(s) => s.x(),
            SimSample::Discontinuity(s) => s.sample().x(),
        }
    }

    pub fn y(&self) -> &[f64] {
        match self {
            SimSample::Regression(s) => s.y(),
            SimSample::Discontinuity(s) => s.sample().y(),
        }
    }
}

/// Generator for replication `rep`: stream `rep` of the seed's ChaCha8 key.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Regressors only, in draw order.
pub fn draw_regressors(dgp: DgpSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    match dgp {
        DgpSpec::Npreg => Ok((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()),
        _ => {
            let beta = Beta::new(2.0, 4.0).map_err(|e| SimError::RngFailure(e.to_string()))?;
            Ok((0..n).map(|_| 2.0 * beta.sample(rng) - 1.0).collect())
        }
    }
}

/// `n` draws of `(x, g(x) + sigma e)`; deterministic in `(seed, rep)`.
pub fn draw_sample(dgp: DgpSpec, n: usize, seed: u64, rep: u64) -> Result<SimSample> {
    let mut rng = replication_rng(seed, rep);
    let x = draw_regressors(dgp, n, &mut rng)?;
    let sigma = dgp.sigma();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let e: f64 = StandardNormal.sample(&mut rng);
            dgp.regression(xi) + sigma * e
        })
        .collect();
    if dgp.is_rdd() {
        Ok(SimSample::Discontinuity(RddSample::new(x, y, 0.0)?))
    } else {
        Ok(SimSample::Regression(Sample::new(x, y)?))
    }
}
