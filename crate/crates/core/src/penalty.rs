//! Folded-concave and L1 penalties.
//!
//! Every penalty here is a piecewise quadratic in `t = |beta|`, which lets
//! the scalar coordinate-descent step be solved exactly: minimize the
//! quadratic-plus-penalty objective on every piece and keep the best
//! candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    Lasso,
    Scad { a: f64 },
    Mcp { gamma: f64 },
    /// Weighted Lasso: coordinate `j` is penalized at level `weights[j] * lambda`.
    AdaptiveLasso { weights: Vec<f64> },
}

/// `c0 + c1 t + c2 t^2` on `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    lo: f64,
    hi: f64,
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Piece {
    fn unbounded(lo: f64, c0: f64) -> Self {
        Piece {
            lo,
            hi: f64::INFINITY,
            c0,
            c1: 0.0,
            c2: 0.0,
        }
    }
}

impl Penalty {
    pub fn scad() -> Self {
        Penalty::Scad { a: DEFAULT_SCAD_A }
    }

    pub fn mcp() -> Self {
        Penalty::Mcp {
            gamma: DEFAULT_MCP_GAMMA,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Penalty::Lasso => "lasso",
            Penalty::Scad { .. } => "scad",
            Penalty::Mcp { .. } => "mcp",
            Penalty::AdaptiveLasso { .. } => "adaptive_lasso",
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Penalty::Lasso | Penalty::AdaptiveLasso { .. })
    }

    /// Checks shape parameters, and weight length against `p` when given.
    pub fn validate(&self, p: Option<usize>) -> Result<()> {
        match self {
            Penalty::Lasso => Ok(()),
            Penalty::Scad { a } if !(a.is_finite() && *a > 2.0) => {
                Err(Error::invalid(format!("SCAD shape a must exceed 2, got {a}")))
            }
            Penalty::Mcp { gamma } if !(gamma.is_finite() && *gamma > 1.0) => {
                Err(Error::invalid(format!("MCP shape gamma must exceed 1, got {gamma}")))
            }
            Penalty::AdaptiveLasso { weights } => {
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::invalid("adaptive weights must be finite and nonnegative"));
                }
                match p {
                    Some(p) if p != weights.len() => Err(Error::DimensionMismatch {
                        what: "adaptive weight vector",
                        expected: p,
                        got: weights.len(),
                    }),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Penalty level applied to coordinate `j`.
    #[inline]
    pub fn level(&self, j: usize, lambda: f64) -> f64 {
        match self {
            Penalty::AdaptiveLasso { weights } => weights[j] * lambda,
            _ => lambda,
        }
    }

    fn pieces(&self, lambda: f64) -> ([Piece; 3], usize) {
        let lasso = Piece::unbounded(0.0, 0.0);
        match *self {
            Penalty::Lasso | Penalty::AdaptiveLasso { .. } => {
                let p = Piece { c1: lambda, ..lasso };
                ([p, p, p], 1)
            }
            Penalty::Scad { a } => {
                let d = a - 1.0;
                (
                    [
                        Piece {
                            lo: 0.0,
                            hi: lambda,
                            c0: 0.0,
                            c1: lambda,
                            c2: 0.0,
                        },
                        Piece {
                            lo: lambda,
                            hi: a * lambda,
                            c0: -lambda * lambda / (2.0 * d),
                            c1: a * lambda / d,
                            c2: -1.0 / (2.0 * d),
                        },
                        Piece::unbounded(a * lambda, lambda * lambda * (a + 1.0) / 2.0),
                    ],
                    3,
                )
            }
            Penalty::Mcp { gamma } => {
                let inner = Piece {
                    lo: 0.0,
                    hi: gamma * lambda,
                    c0: 0.0,
                    c1: lambda,
                    c2: -1.0 / (2.0 * gamma),
                };
                let outer = Piece::unbounded(gamma * lambda, gamma * lambda * lambda / 2.0);
                ([inner, outer, outer], 2)
            }
        }
    }

    /// `p_lambda(t)` without argument checks. `t >= 0`.
    #[inline]
    pub(crate) fn value_unchecked(&self, lambda: f64, t: f64) -> f64 {
        match *self {
            Penalty::Lasso | Penalty::AdaptiveLasso { .. } => lambda * t,
            Penalty::Scad { a } => {
                if t <= lambda {
                    lambda * t
                } else if t <= a * lambda {
                    (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            Penalty::Mcp { gamma } => {
                if t <= gamma * lambda {
                    lambda * t - t * t / (2.0 * gamma)
                } else {
                    gamma * lambda * lambda / 2.0
                }
            }
        }
    }

    pub fn value(&self, lambda: f64, t: f64) -> Result<f64> {
        check_nonneg("lambda", lambda)?;
        check_nonneg("t", t)?;
        Ok(self.value_unchecked(lambda, t))
    }

    /// `sum_j p_{level_j}(|beta_j|)`.
    pub fn total(&self, lambda: f64, beta: &[f64]) -> f64 {
        beta.iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, b)| self.value_unchecked(self.level(j, lambda), b.abs()))
            .sum()
    }

    #[inline]
    pub(crate) fn derivative_unchecked(&self, lambda: f64, t: f64) -> f64 {
        match *self {
            Penalty::Lasso | Penalty::AdaptiveLasso { .. } => lambda,
            Penalty::Scad { a } => {
                if t <= lambda {
                    lambda
                } else {
                    (a * lambda - t).max(0.0) / (a - 1.0)
                }
            }
            Penalty::Mcp { gamma } => (lambda - t / gamma).max(0.0),
        }
    }

    /// `p'_lambda(t)` for `t > 0`.
    pub fn derivative(&self, lambda: f64, t: f64) -> Result<f64> {
        check_nonneg("lambda", lambda)?;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!(
                "penalty derivative needs t > 0, got {t}; use derivative_at_zero"
            )));
        }
        Ok(self.derivative_unchecked(lambda, t))
    }

    /// One-sided limit `p'_lambda(0+)`, equal to `lambda` for every kind.
    pub fn derivative_at_zero(&self, lambda: f64) -> f64 {
        lambda
    }

    /// Global minimizer of `v/2 (beta - z/v)^2 + p_lambda(|beta|)`.
    pub fn threshold(&self, lambda: f64, z: f64, v: f64) -> Result<f64> {
        check_nonneg("lambda", lambda)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("curvature v must be positive, got {v}")));
        }
        if !z.is_finite() {
            return Err(Error::invalid(format!("working statistic must be finite, got {z}")));
        }
        Ok(self.threshold_unchecked(lambda, z, v))
    }

    pub(crate) fn threshold_unchecked(&self, lambda: f64, z: f64, v: f64) -> f64 {
        if lambda == 0.0 {
            return z / v;
        }
        if let Penalty::Lasso | Penalty::AdaptiveLasso { .. } = self {
            return soft_threshold(z, lambda) / v;
        }
        let az = z.abs();
        // Along t = |beta| with sign(beta) = sign(z) the objective is
        // f(t) = v t^2 / 2 - |z| t + p(t), up to a constant; f(0) = 0.
        let (pieces, count) = self.pieces(lambda);
        let (mut best_t, mut best_f) = (0.0, 0.0);
        for piece in &pieces[..count] {
            let quad = 0.5 * v + piece.c2;
            let lin = piece.c1 - az;
            let f = |t: f64| (quad * t + lin) * t + piece.c0;
            let mut consider = |t: f64| {
                let ft = f(t);
                if ft < best_f {
                    best_t = t;
                    best_f = ft;
                }
            };
            consider(piece.lo);
            if quad > 0.0 {
                let t = -lin / (2.0 * quad);
                if t > piece.lo && t < piece.hi {
                    consider(t);
                }
            }
            if piece.hi.is_finite() {
                consider(piece.hi);
            }
        }
        best_t.copysign(z)
    }
}

/// `sign(z) max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")))
    }
}
