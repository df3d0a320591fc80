//! Compact-support kernels on (-1, 1) and their exact moments.
//!
//! Every kernel here is piecewise polynomial, so moments of `K` and `K^2`
//! are computed from polynomial antiderivatives rather than by quadrature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five named unit-integral kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Triangular,
    Uniform,
    Epanechnikov,
    Biweight,
    Triweight,
}

/// A polynomial piece `sum_k coef[k] * u^k` valid on `[lo, hi]`.
struct Piece {
    lo: f64,
    hi: f64,
    coef: &'static [f64],
}

const TRI_LEFT: [f64; 2] = [1.0, 1.0];
const TRI_RIGHT: [f64; 2] = [1.0, -1.0];
const UNIFORM: [f64; 1] = [0.5];
const EPANECHNIKOV: [f64; 3] = [0.75, 0.0, -0.75];
const BIWEIGHT: [f64; 5] = [15.0 / 16.0, 0.0, -30.0 / 16.0, 0.0, 15.0 / 16.0];
const TRIWEIGHT: [f64; 7] = [
    35.0 / 32.0,
    0.0,
    -105.0 / 32.0,
    0.0,
    105.0 / 32.0,
    0.0,
    -35.0 / 32.0,
];

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::Triangular,
        Kernel::Uniform,
        Kernel::Epanechnikov,
        Kernel::Biweight,
        Kernel::Triweight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Triangular => "triangular",
            Kernel::Uniform => "uniform",
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Biweight => "biweight",
            Kernel::Triweight => "triweight",
        }
    }

    /// Evaluates `K(u)`. Exactly zero for `|u| >= 1`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        let a = u.abs();
        if !(a < 1.0) {
            return 0.0;
        }
        match self {
            Kernel::Triangular => 1.0 - a,
            Kernel::Uniform => 0.5,
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Biweight => {
                let t = 1.0 - u * u;
                15.0 / 16.0 * t * t
            }
            Kernel::Triweight => {
                let t = 1.0 - u * u;
                35.0 / 32.0 * t * t * t
            }
        }
    }

    /// Points inside (-1, 1) where the kernel is not smooth.
    pub fn interior_kinks(self) -> &'static [f64] {
        match self {
            Kernel::Triangular => &[0.0],
            _ => &[],
        }
    }

    fn pieces(self) -> Vec<Piece> {
        match self {
            Kernel::Triangular => vec![
                Piece {
                    lo: -1.0,
                    hi: 0.0,
                    coef: &TRI_LEFT,
                },
                Piece {
                    lo: 0.0,
                    hi: 1.0,
                    coef: &TRI_RIGHT,
                },
            ],
            Kernel::Uniform => vec![Piece {
                lo: -1.0,
                hi: 1.0,
                coef: &UNIFORM,
            }],
            Kernel::Epanechnikov => vec![Piece {
                lo: -1.0,
                hi: 1.0,
                coef: &EPANECHNIKOV,
            }],
            Kernel::Biweight => vec![Piece {
                lo: -1.0,
                hi: 1.0,
                coef: &BIWEIGHT,
            }],
            Kernel::Triweight => vec![Piece {
                lo: -1.0,
                hi: 1.0,
                coef: &TRIWEIGHT,
            }],
        }
    }

    /// `int_lower^upper K(u)^m u^power du` with `m = 2` when `squared`.
    ///
    /// Requires `-1 <= lower < upper <= 1`.
    pub fn moment(self, power: u32, lower: f64, upper: f64, squared: bool) -> Result<f64> {
        if !(lower < upper) || lower < -1.0 || upper > 1.0 {
            return Err(Error::InvalidRange { lower, upper });
        }
        Ok(self.moment_unchecked(power, lower, upper, squared))
    }

    /// Same as [`Kernel::moment`] but clamps the range to `[-1, 1]` and
    /// returns 0 for empty ranges.
    pub fn moment_clamped(self, power: u32, lower: f64, upper: f64, squared: bool) -> f64 {
        let lo = lower.max(-1.0);
        let hi = upper.min(1.0);
        if lo >= hi {
            return 0.0;
        }
        self.moment_unchecked(power, lo, hi, squared)
    }

    fn moment_unchecked(self, power: u32, lower: f64, upper: f64, squared: bool) -> f64 {
        let mut total = 0.0;
        for piece in self.pieces() {
            let a = piece.lo.max(lower);
            let b = piece.hi.min(upper);
            if a >= b {
                continue;
            }
            let poly = if squared {
                poly_square(piece.coef)
            } else {
                piece.coef.to_vec()
            };
            total += integrate_monomial_poly(&poly, power, a, b);
        }
        total
    }
}

fn poly_square(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * c.len() - 1];
    for (i, a) in c.iter().enumerate() {
        for (j, b) in c.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `int_a^b u^power * sum_k c[k] u^k du` from the antiderivative.
fn integrate_monomial_poly(c: &[f64], power: u32, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for (k, &ck) in c.iter().enumerate() {
        if ck == 0.0 {
            continue;
        }
        let e = k as i32 + power as i32 + 1;
        total += ck * (b.powi(e) - a.powi(e)) / e as f64;
    }
    total
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKernel(s.to_string()))
    }
}
