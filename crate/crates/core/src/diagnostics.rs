//! Unpenalized refits and population-level diagnostics.
//!
//! * restricted MLEs on a fixed support and the GIC proxy built from them;
//! * the Kullback-Leibler divergence `I(beta)` from the true model, its
//!   minimizer on a support, and the minimal signal strength `delta_n`;
//! * the quadratic form `Z_alpha` of the weighted projection difference
//!   `B_alpha - B_alpha0`, and the exact Gaussian identity
//!   `D(mu*_alpha) - D(mu*_alpha0) = -Z_alpha` for nested supports.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;

pub mod suite;

/// Score tolerance for Newton convergence, relative to `n`.
const SCORE_TOL: f64 = 1e-8;
/// Looser tolerance accepted (with `converged = false`) after the iteration cap.
const SCORE_TOL_LOOSE: f64 = 1e-6;
/// Newton steps must shrink below this (relative) size before convergence.
const STEP_TOL: f64 = 1e-6;
const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 50;
/// Binomial coefficients beyond this magnitude signal separation.
pub const SEPARATION_BOUND: f64 = 30.0;
/// Maximum number of candidate supports enumerated by [`delta_min`].
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedFit {
    pub support: Vec<usize>,
    pub beta: Vec<f64>,
    pub deviance: f64,
    pub converged: bool,
}

fn normalize_support(support: &[usize], p: usize) -> Result<Vec<usize>> {
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&j) = s.last() {
        if j >= p {
            return Err(Error::invalid(format!("support index {j} out of range for p = {p}")));
        }
    }
    Ok(s)
}

fn submatrix(x: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    x.select_columns(support)
}

/// Newton-Raphson with step halving for `X_a^T (y - b'(X_a b)) = 0`.
/// `y` may be any vector in the mean space (e.g. a noiseless mean).
fn newton_on_support(
    family: &Family,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    support: &[usize],
) -> Result<(DVector<f64>, bool)> {
    let n = x.nrows();
    let p = x.ncols();
    let mut full = DVector::zeros(p);
    if support.is_empty() {
        return Ok((full, true));
    }
    let xa = submatrix(x, support);
    check_rank(&xa, support)?;
    let k = support.len();
    let tol = SCORE_TOL * n as f64;
    let loose = SCORE_TOL_LOOSE * n as f64;
    let phi = family.phi();

    let mut b = DVector::zeros(k);
    let mut eta = DVector::zeros(n);
    let mut ll = family.log_likelihood_eta(y, &eta);
    let mut score_norm = f64::INFINITY;
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let mu = family.mean_from_eta(&eta);
        let score = xa.tr_mul(&(y - &mu));
        score_norm = score.amax();
        let var = eta.map(|e| family.variance(e) / phi);
        let mut weighted = xa.clone();
        for (mut row, v) in weighted.row_iter_mut().zip(var.iter()) {
            row *= *v;
        }
        let hess = xa.tr_mul(&weighted);
        let Some(chol) = hess.cholesky() else {
            if matches!(family, Family::Binomial) && b.amax() > 1.0 {
                return Err(Error::Separation {
                    support: support.to_vec(),
                    bound: SEPARATION_BOUND,
                });
            }
            return Err(Error::RankDeficient {
                support: support.to_vec(),
            });
        };
        let step = chol.solve(&(score / phi));
        // A small score alone is not enough: under separation the score
        // vanishes while the Newton steps stay of order one.
        if score_norm <= tol && step.amax() <= STEP_TOL * (1.0 + b.amax()) {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &b + &step * t;
            let trial_eta = &xa * &trial;
            let trial_ll = family.log_likelihood_eta(y, &trial_eta);
            if trial_ll.is_finite() && trial_ll >= ll {
                b = trial;
                eta = trial_eta;
                ll = trial_ll;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if matches!(family, Family::Binomial) && b.amax() > SEPARATION_BOUND {
            return Err(Error::Separation {
                support: support.to_vec(),
                bound: SEPARATION_BOUND,
            });
        }
        if !moved {
            break;
        }
    }
    if !converged {
        let mu = family.mean_from_eta(&eta);
        score_norm = xa.tr_mul(&(y - &mu)).amax();
    }
    if !converged && score_norm > loose {
        return Err(Error::NewtonFailure {
            support: support.to_vec(),
            score_norm,
        });
    }
    for (&j, &v) in support.iter().zip(b.iter()) {
        full[j] = v;
    }
    Ok((full, converged))
}

fn check_rank(xa: &DMatrix<f64>, support: &[usize]) -> Result<()> {
    if xa.ncols() > xa.nrows() {
        return Err(Error::RankDeficient {
            support: support.to_vec(),
        });
    }
    let r = xa.clone().qr().r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || diag.iter().any(|&d| d <= 1e-10 * max) {
        return Err(Error::RankDeficient {
            support: support.to_vec(),
        });
    }
    Ok(())
}

/// Unpenalized MLE with `supp(beta)` restricted to `support`.
pub fn restricted_mle(family: &Family, data: &Dataset, support: &[usize]) -> Result<RestrictedFit> {
    family.validate_response(data.y())?;
    let support = normalize_support(support, data.p())?;
    if !support.is_empty() && support.len() >= data.n() {
        return Err(Error::invalid(format!(
            "restricted MLE needs |support| < n ({} >= {})",
            support.len(),
            data.n()
        )));
    }
    let (beta, converged) = newton_on_support(family, data.x(), data.y(), &support)?;
    let mu = family.mean_from_eta(&(data.x() * &beta));
    let deviance = family.deviance(&mu, data.y())?;
    Ok(RestrictedFit {
        support,
        beta: beta.as_slice().to_vec(),
        deviance,
        converged,
    })
}

/// `GIC*(alpha) = (D(mu*_alpha; y) + a_n |alpha|) / n`.
pub fn gic_star_value(family: &Family, data: &Dataset, support: &[usize], a_n: f64) -> Result<f64> {
    let fit = restricted_mle(family, data, support)?;
    Ok((fit.deviance + a_n * fit.support.len() as f64) / data.n() as f64)
}

fn support_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

fn contains_all(superset: &[usize], subset: &[usize]) -> bool {
    subset.iter().all(|j| superset.contains(j))
}

/// Minimizer of `I(beta)` over `supp(beta) ⊆ support`: the restricted MLE
/// with the response replaced by the true mean `b'(X beta0)`. Supports
/// containing the true one return `beta0` itself.
pub fn population_minimizer(family: &Family, x: &DMatrix<f64>, beta0: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    check_beta(x, beta0)?;
    let support = normalize_support(support, x.ncols())?;
    if contains_all(&support, &support_of(beta0)) {
        return Ok(beta0.to_vec());
    }
    population_minimizer_newton(family, x, beta0, &support)
}

/// Same as [`population_minimizer`] but always iterating, never
/// short-circuiting on supersets of the true support.
pub fn population_minimizer_newton(
    family: &Family,
    x: &DMatrix<f64>,
    beta0: &[f64],
    support: &[usize],
) -> Result<Vec<f64>> {
    check_beta(x, beta0)?;
    let support = normalize_support(support, x.ncols())?;
    let mu0 = family.mean_from_eta(&(x * DVector::from_column_slice(beta0)));
    let (beta, _) = newton_on_support(family, x, &mu0, &support)?;
    Ok(beta.as_slice().to_vec())
}

fn check_beta(x: &DMatrix<f64>, beta: &[f64]) -> Result<()> {
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: x.ncols(),
            got: beta.len(),
        });
    }
    Ok(())
}

/// `I(beta) = sum_i { b'(x_i beta0) x_i (beta0 - beta) - b(x_i beta0) + b(x_i beta) } / phi`.
pub fn kl_divergence(family: &Family, x: &DMatrix<f64>, beta0: &[f64], beta: &[f64]) -> Result<f64> {
    check_beta(x, beta0)?;
    check_beta(x, beta)?;
    let eta0 = x * DVector::from_column_slice(beta0);
    let eta = x * DVector::from_column_slice(beta);
    let total: f64 = eta0
        .iter()
        .zip(eta.iter())
        .map(|(&t0, &t)| family.mean(t0) * (t0 - t) - family.b(t0) + family.b(t))
        .sum();
    Ok((total / family.phi()).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaMin {
    /// `min (1/n) I(beta*(alpha))` over the candidates examined.
    pub value: f64,
    pub argmin: Vec<usize>,
    pub models: u128,
    /// True for the sampling estimator, which only bounds `delta_n` from above.
    pub approximate: bool,
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of supports of size at most `k` among `p` indices (saturating).
pub fn count_models(p: usize, k: usize) -> u128 {
    (0..=k.min(p)).fold(0u128, |acc, j| acc.saturating_add(binomial(p as u128, j as u128)))
}

/// Exact `delta_n`: minimum of `(1/n) I(beta*(alpha))` over every underfitted
/// support `alpha` (not containing the true one) with `|alpha| <= k`,
/// including the empty model.
pub fn delta_min(family: &Family, x: &DMatrix<f64>, beta0: &[f64], k: usize) -> Result<DeltaMin> {
    check_beta(x, beta0)?;
    let p = x.ncols();
    let models = count_models(p, k);
    if models > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            models,
            limit: ENUMERATION_LIMIT,
        });
    }
    let alpha0 = support_of(beta0);
    let candidates: Vec<Vec<usize>> = (0..=k.min(p))
        .flat_map(|size| (0..p).combinations(size))
        .filter(|a| !contains_all(a, &alpha0))
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("no underfitted support exists (true support is empty)"));
    }
    let n = x.nrows() as f64;
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|a| {
            let b = population_minimizer_newton(family, x, beta0, a)?;
            Ok(kl_divergence(family, x, beta0, &b)? / n)
        })
        .collect::<Result<_>>()?;
    // first minimum in enumeration order
    let (idx, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    Ok(DeltaMin {
        value,
        argmin: candidates[idx].clone(),
        models: candidates.len() as u128,
        approximate: false,
    })
}

/// Approximate `delta_n` from `samples` uniformly drawn underfitted supports
/// with `|alpha| <= k`. The result is an upper bound on the exact value.
pub fn delta_min_sampled(
    family: &Family,
    x: &DMatrix<f64>,
    beta0: &[f64],
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<DeltaMin> {
    check_beta(x, beta0)?;
    let p = x.ncols();
    let k = k.min(p);
    let alpha0 = support_of(beta0);
    if alpha0.is_empty() {
        return Err(Error::invalid("no underfitted support exists (true support is empty)"));
    }
    // size distribution proportional to C(p, size)
    let log_w: Vec<f64> = (0..=k)
        .map(|s| statrs::function::factorial::ln_binomial(p as u64, s as u64))
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let dist = rand::distr::weighted::WeightedIndex::new(&weights)
        .map_err(|e| Error::invalid(format!("size distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while candidates.len() < samples && attempts < samples.saturating_mul(1000).max(1000) {
        attempts += 1;
        let size = rng.sample(&dist);
        let mut a = rand::seq::index::sample(&mut rng, p, size).into_vec();
        a.sort_unstable();
        if !contains_all(&a, &alpha0) {
            candidates.push(a);
        }
    }
    let n = x.nrows() as f64;
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|a| {
            let b = population_minimizer_newton(family, x, beta0, a)?;
            Ok(kl_divergence(family, x, beta0, &b)? / n)
        })
        .collect::<Result<_>>()?;
    let (idx, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    Ok(DeltaMin {
        value,
        argmin: candidates.get(idx).cloned().unwrap_or_default(),
        models: candidates.len() as u128,
        approximate: true,
    })
}

/// Truth-dependent quantities for one design.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsContext {
    pub family: Family,
    pub beta0: Vec<f64>,
    pub alpha0: Vec<usize>,
    pub mu0: DVector<f64>,
    /// `Var(Y_i) = phi * b''(x_i beta0)`.
    pub h0: DVector<f64>,
}

impl DiagnosticsContext {
    pub fn new(family: Family, x: &DMatrix<f64>, beta0: Vec<f64>) -> Result<Self> {
        check_beta(x, &beta0)?;
        let eta0 = x * DVector::from_column_slice(&beta0);
        let mu0 = family.mean_from_eta(&eta0);
        let h0 = eta0.map(|e| family.phi() * family.variance(e));
        if h0.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Domain("true variances must be positive".into()));
        }
        Ok(DiagnosticsContext {
            family,
            alpha0: support_of(&beta0),
            beta0,
            mu0,
            h0,
        })
    }
}

/// Squared norm of the projection of `e` onto the column space of `a`.
fn projected_sq_norm(a: &DMatrix<f64>, e: &DVector<f64>, support: &[usize]) -> Result<f64> {
    if a.ncols() == 0 {
        return Ok(0.0);
    }
    check_rank(a, support)?;
    let q = a.clone().qr().q();
    Ok(q.tr_mul(e).norm_squared())
}

/// `Z_alpha = (y - mu0)^T H0^{-1/2} (B_alpha - B_alpha0) H0^{-1/2} (y - mu0)`
/// for `alpha ⊇ alpha0`, through thin QR factors of `H0^{1/2} X_alpha`.
pub fn projection_quadform(data: &Dataset, ctx: &DiagnosticsContext, support: &[usize]) -> Result<f64> {
    let support = normalize_support(support, data.p())?;
    if !contains_all(&support, &ctx.alpha0) {
        return Err(Error::invalid("projection_quadform needs a support containing the true one"));
    }
    if ctx.h0.len() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "context variance vector",
            expected: data.n(),
            got: ctx.h0.len(),
        });
    }
    let sqrt_h = ctx.h0.map(f64::sqrt);
    let e = DVector::from_iterator(
        data.n(),
        data.y()
            .iter()
            .zip(ctx.mu0.iter())
            .zip(sqrt_h.iter())
            .map(|((y, m), s)| (y - m) / s),
    );
    let weighted = |cols: &[usize]| {
        let mut a = submatrix(data.x(), cols);
        for (mut row, s) in a.row_iter_mut().zip(sqrt_h.iter()) {
            row *= *s;
        }
        a
    };
    let big = projected_sq_norm(&weighted(&support), &e, &support)?;
    let small = projected_sq_norm(&weighted(&ctx.alpha0), &e, &ctx.alpha0)?;
    Ok(big - small)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `D(mu*_alpha; y) - D(mu*_alpha0; y)` (restricted Newton fits)
/// against `-Z_alpha` (QR projections) for a Gaussian design.
pub fn verify_gaussian_deviance_identity(
    data: &Dataset,
    ctx: &DiagnosticsContext,
    support: &[usize],
) -> Result<IdentityCheck> {
    if !matches!(ctx.family, Family::Gaussian { .. }) {
        return Err(Error::invalid("the deviance identity is exact only for the Gaussian family"));
    }
    let d_alpha = restricted_mle(&ctx.family, data, support)?.deviance;
    let d_alpha0 = restricted_mle(&ctx.family, data, &ctx.alpha0)?.deviance;
    let lhs = d_alpha - d_alpha0;
    let rhs = -projection_quadform(data, ctx, support)?;
    Ok(IdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Asymptotic critical value of the one-sample KS statistic at level 0.01.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
