//! Canonical-link exponential families.
//!
//! Each family supplies the cumulant function `b` with its first two
//! derivatives. The log-likelihood of a coefficient vector is
//!
//! ```text
//! l(beta) = sum_i { y_i * eta_i - b(eta_i) } / phi,    eta = X beta
//! ```
//!
//! with the `c(y, phi)` term dropped: it does not depend on `beta` and cancels
//! in every deviance difference and every argmax. `phi` divides only for the
//! Gaussian family; Binomial and Poisson have `phi = 1`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Linear predictors are clamped to this magnitude before the logistic mean
/// and variance are evaluated.
pub const BINOMIAL_ETA_CLAMP: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Gaussian { phi: f64 },
    Binomial,
    Poisson,
}

/// `b(theta)`, `b'(theta)` and `b''(theta)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cumulant {
    pub b: f64,
    pub db: f64,
    pub d2b: f64,
}

impl Family {
    pub fn gaussian(phi: f64) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::invalid(format!("Gaussian scale phi must be positive, got {phi}")));
        }
        Ok(Family::Gaussian { phi })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
        }
    }

    /// Dispersion dividing the log-likelihood (1 outside the Gaussian family).
    pub fn phi(&self) -> f64 {
        match *self {
            Family::Gaussian { phi } => phi,
            _ => 1.0,
        }
    }

    pub fn cumulant(&self, theta: f64) -> Result<Cumulant> {
        if !theta.is_finite() {
            return Err(Error::Domain(format!("non-finite canonical parameter {theta}")));
        }
        let c = Cumulant {
            b: self.b(theta),
            db: self.mean(theta),
            d2b: self.variance(theta),
        };
        if !(c.b.is_finite() && c.db.is_finite() && c.d2b.is_finite()) {
            return Err(Error::Domain(format!(
                "cumulant overflow at theta = {theta} for the {} family",
                self.name()
            )));
        }
        Ok(c)
    }

    #[inline]
    pub(crate) fn b(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian { .. } => 0.5 * theta * theta,
            // softplus, evaluated without overflow
            Family::Binomial => {
                if theta > 0.0 {
                    theta + (-theta).exp().ln_1p()
                } else {
                    theta.exp().ln_1p()
                }
            }
            Family::Poisson => theta.exp(),
        }
    }

    #[inline]
    pub(crate) fn mean(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian { .. } => theta,
            Family::Binomial => {
                let t = theta.clamp(-BINOMIAL_ETA_CLAMP, BINOMIAL_ETA_CLAMP);
                1.0 / (1.0 + (-t).exp())
            }
            Family::Poisson => theta.exp(),
        }
    }

    #[inline]
    pub(crate) fn variance(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian { .. } => 1.0,
            Family::Binomial => {
                let m = self.mean(theta);
                m * (1.0 - m)
            }
            Family::Poisson => theta.exp(),
        }
    }

    /// Mean at the origin, `b'(0)`.
    pub fn null_mean(&self) -> f64 {
        self.mean(0.0)
    }

    /// Checks the support of the response: finite everywhere, `{0, 1}` for
    /// Binomial and nonnegative integers for Poisson.
    pub fn validate_response(&self, y: &DVector<f64>) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            let ok = v.is_finite()
                && match self {
                    Family::Gaussian { .. } => true,
                    Family::Binomial => v == 0.0 || v == 1.0,
                    Family::Poisson => v >= 0.0 && v.fract() == 0.0,
                };
            if !ok {
                return Err(Error::invalid(format!(
                    "response {v} at position {} is outside the {} support",
                    i + 1,
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// `sum_i (y_i eta_i - b(eta_i)) / phi` for a given linear predictor.
    pub fn log_likelihood_eta(&self, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        let s: f64 = y
            .iter()
            .zip(eta.iter())
            .map(|(&yi, &ei)| yi * ei - self.b(ei))
            .sum();
        s / self.phi()
    }

    pub fn log_likelihood(&self, data: &Dataset, beta: &DVector<f64>) -> Result<f64> {
        let eta = data.linear_predictor(beta)?;
        Ok(self.log_likelihood_eta(data.y(), &eta))
    }

    pub fn mean_from_eta(&self, eta: &DVector<f64>) -> DVector<f64> {
        eta.map(|e| self.mean(e))
    }

    pub fn mean_vector(&self, data: &Dataset, beta: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.mean_from_eta(&data.linear_predictor(beta)?))
    }

    /// Scaled deviance `2 { l(y; y) - l(mu; y) }`.
    pub fn deviance(&self, mu: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        if mu.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "fitted mean vs response",
                expected: y.len(),
                got: mu.len(),
            });
        }
        let mut total = 0.0;
        for (i, (&m, &yi)) in mu.iter().zip(y.iter()).enumerate() {
            let term = match self {
                Family::Gaussian { .. } => (yi - m) * (yi - m),
                Family::Binomial => {
                    if !(0.0..=1.0).contains(&m) || (m == 0.0 && yi > 0.0) || (m == 1.0 && yi < 1.0) {
                        return Err(boundary(i, m, yi, self));
                    }
                    2.0 * (xlogy_ratio(yi, m) + xlogy_ratio(1.0 - yi, 1.0 - m))
                }
                Family::Poisson => {
                    if m < 0.0 || (m == 0.0 && yi > 0.0) {
                        return Err(boundary(i, m, yi, self));
                    }
                    2.0 * (xlogy_ratio(yi, m) - (yi - m))
                }
            };
            total += term;
        }
        if !total.is_finite() {
            return Err(Error::Domain("non-finite deviance".into()));
        }
        // Rounding can leave a tiny negative sum when mu reproduces y.
        Ok(total.max(0.0) / self.phi())
    }
}

/// `a * ln(a / b)` with `0 * ln 0 := 0`.
#[inline]
fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

fn boundary(i: usize, m: f64, y: f64, family: &Family) -> Error {
    Error::Domain(format!(
        "fitted mean {m} at position {} is incompatible with response {y} for the {} family",
        i + 1,
        family.name()
    ))
}
