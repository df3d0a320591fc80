//! Brute-force reference implementation: normal equations, explicit double
//! sums, no sorting or windowing tricks.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use npreg_core::Kernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
pub enum Keep {
    All,
    Right(f64),
    Left(f64),
}

impl Keep {
    fn admits(self, x: f64) -> bool {
        match self {
            Keep::All => true,
            Keep::Right(c) => x >= c,
            Keep::Left(c) => x < c,
        }
    }
}

/// `(Z'KZ)^{-1} Z'K` in scaled coordinates as `(order+1)` rows of length n.
pub fn wls_rows(
    x: &[f64],
    x0: f64,
    h: f64,
    order: usize,
    kernel: Kernel,
    keep: Keep,
) -> Option<Vec<Vec<f64>>> {
    let n = x.len();
    let m = order + 1;
    let u: Vec<f64> = x.iter().map(|xi| (xi - x0) / h).collect();
    let k: Vec<f64> = x
        .iter()
        .zip(&u)
        .map(|(&xi, &ui)| {
            if keep.admits(xi) {
                kernel.eval(ui)
            } else {
                0.0
            }
        })
        .collect();
    let mut zkz = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for a in 0..m {
            for b in 0..m {
                zkz[(a, b)] += k[i] * u[i].powi((a + b) as i32);
            }
        }
    }
    let inv = zkz.try_inverse()?;
    let mut rows = vec![vec![0.0; n]; m];
    for i in 0..n {
        if k[i] == 0.0 {
            continue;
        }
        let r = DVector::from_iterator(m, (0..m).map(|a| u[i].powi(a as i32)));
        let col = &inv * r;
        for a in 0..m {
            rows[a][i] = col[a] * k[i];
        }
    }
    Some(rows)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every ingredient of the three bootstrap schemes at one point.
pub struct Reference {
    pub nh: f64,
    pub ghat: f64,
    pub c_n: f64,
    pub c_lp: f64,
    pub q: f64,
    /// `w_i(x0)`, full length.
    pub w: Vec<f64>,
    pub w_gp_bc: Vec<f64>,
    pub w_lp_bc: Vec<f64>,
    /// HC-adjusted residuals (hc3).
    pub resid: Vec<f64>,
    /// Order `p+1` pilot polynomial evaluated at every `x_i`.
    pub pilot_fit: Vec<f64>,
    pub pilot_at_point: f64,
    /// `ghat(x_j)` for every `j` with `w_j != 0`.
    pub lp_fit: Vec<f64>,
}

impl Reference {
    pub fn new(
        x: &[f64],
        y: &[f64],
        x0: f64,
        h: f64,
        p: usize,
        kernel: Kernel,
        keep: Keep,
    ) -> Reference {
        let n = x.len();
        let nh = n as f64 * h;
        let l = wls_rows(x, x0, h, p, kernel, keep).expect("base fit");
        let pilot = wls_rows(x, x0, h, p + 1, kernel, keep).expect("pilot fit");
        let u = |xi: f64, c: f64| (xi - c) / h;
        let w: Vec<f64> = l[0].iter().map(|v| nh * v).collect();
        let ghat = dot(&l[0], y);
        let curv = |row: &[f64], c: f64| -> f64 {
            row.iter()
                .zip(x)
                .map(|(a, &xi)| a * u(xi, c).powi(p as i32 + 1))
                .sum()
        };
        let c_n = curv(&l[0], x0);
        let beta: Vec<f64> = pilot.iter().map(|r| dot(r, y)).collect();
        let poly = |xi: f64| -> f64 {
            beta.iter()
                .enumerate()
                .map(|(k, b)| b * u(xi, x0).powi(k as i32))
                .sum()
        };
        let pilot_fit: Vec<f64> = x.iter().map(|&xi| poly(xi)).collect();
        let resid: Vec<f64> = (0..n)
            .map(|i| {
                let lev: f64 = (0..=p + 1)
                    .map(|k| pilot[k][i] * u(x[i], x0).powi(k as i32))
                    .sum();
                (y[i] - pilot_fit[i]) / (1.0 - lev)
            })
            .collect();
        let w_gp_bc: Vec<f64> = pilot[p + 1].iter().map(|v| c_n * nh * v).collect();
        let mut w_lp_bc: Vec<f64> = w.iter().map(|v| -v).collect();
        let mut lp_fit = vec![f64::NAN; n];
        let mut c_lp = 0.0;
        for j in 0..n {
            if w[j] == 0.0 {
                continue;
            }
            let lj = wls_rows(x, x[j], h, p, kernel, keep).expect("inner fit");
            lp_fit[j] = dot(&lj[0], y);
            c_lp += w[j] * curv(&lj[0], x[j]) / nh;
            for i in 0..n {
                w_lp_bc[i] += w[j] * lj[0][i];
            }
        }
        Reference {
            nh,
            ghat,
            c_n,
            c_lp,
            q: c_n / c_lp,
            w,
            w_gp_bc,
            w_lp_bc,
            resid,
            pilot_at_point: beta[0],
            pilot_fit,
            lp_fit,
        }
    }

    pub fn gp_bias(&self, y: &[f64]) -> f64 {
        dot(&self.w_gp_bc, y) / self.nh.sqrt()
    }

    pub fn lp_bias(&self, y: &[f64]) -> f64 {
        dot(&self.w_lp_bc, y) / self.nh.sqrt()
    }

    /// `(nh)^{-1} sum (w_i - c bc_i)^2 eps_i^2`.
    pub fn variance(&self, bc: &[f64], c: f64) -> f64 {
        (0..self.w.len())
            .map(|i| (self.w[i] - c * bc[i]).powi(2) * self.resid[i].powi(2))
            .sum::<f64>()
            / self.nh
    }

    pub fn boot_variance(&self) -> f64 {
        self.variance(&vec![0.0; self.w.len()], 0.0)
    }
}

/// Draws on `[-1, 1]`, reproducible from `seed`.
pub fn random_design(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| (2.0 * v).sin() + v * v + 0.5 * rng.gen_range(-1.0..1.0))
        .collect();
    (x, y)
}

/// Mean and standard deviation of a stream.
#[derive(Default)]
pub struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        (self.m2 / (self.n - 1.0)).sqrt()
    }

    pub fn count(&self) -> f64 {
        self.n
    }
}
