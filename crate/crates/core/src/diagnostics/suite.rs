//! Toy-scale self-check of the diagnostics, run by `gicselect diagnose`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{
    delta_min, kl_divergence, ks_critical_1pct, ks_statistic, projection_quadform, verify_gaussian_deviance_identity,
    DiagnosticsContext,
};
use crate::dataset::{standardize_columns, Dataset};
use crate::error::{Error, Result};
use crate::family::Family;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Gaussian design with `n` rows and standardized i.i.d. normal columns.
pub fn gaussian_design(rng: &mut impl Rng, n: usize, p: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    standardize_columns(&raw).x
}

/// Nested Gaussian instance: true support `{0, .., s0-1}` with coefficients
/// drawn from `±[1, 3]`, response `X beta0 + N(0, phi)`, and a random
/// overfitted support of size `size` containing the true one.
pub struct NestedInstance {
    pub data: Dataset,
    pub ctx: DiagnosticsContext,
    pub support: Vec<usize>,
}

pub fn nested_instance(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    s0: usize,
    size: usize,
    phi: f64,
) -> Result<NestedInstance> {
    if !(s0 <= size && size <= p) {
        return Err(Error::invalid("need s0 <= size <= p"));
    }
    let x = gaussian_design(rng, n, p);
    let mut beta0 = vec![0.0; p];
    for b in beta0.iter_mut().take(s0) {
        let mag: f64 = rng.random_range(1.0..3.0);
        *b = if rng.random_bool(0.5) { mag } else { -mag };
    }
    let family = Family::gaussian(phi)?;
    let ctx = DiagnosticsContext::new(family, &x, beta0)?;
    let sd = phi.sqrt();
    let y = DVector::from_iterator(n, ctx.mu0.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)));
    let extra = rand::seq::index::sample(rng, p - s0, size - s0);
    let mut support: Vec<usize> = (0..s0).chain(extra.iter().map(|j| j + s0)).collect();
    support.sort_unstable();
    Ok(NestedInstance {
        data: Dataset::from_standardized(x, y)?,
        ctx,
        support,
    })
}

/// Monte-Carlo draws of `Z_alpha` for a fixed Gaussian design and support.
pub fn z_alpha_draws(rng: &mut impl Rng, n: usize, p: usize, s0: usize, size: usize, draws: usize) -> Result<Vec<f64>> {
    let inst = nested_instance(rng, n, p, s0, size, 1.0)?;
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let y = DVector::from_iterator(n, inst.ctx.mu0.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)));
        let data = inst.data.with_response(y)?;
        out.push(projection_quadform(&data, &inst.ctx, &inst.support)?);
    }
    Ok(out)
}

fn check(name: &str, value: f64, threshold: f64, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        value,
        threshold,
        detail,
    }
}

pub fn run(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // I(beta0) = 0 for every family
    let x = gaussian_design(&mut rng, 30, 5);
    let beta0 = vec![0.8, -0.5, 0.0, 0.3, 0.0];
    let mut worst: f64 = 0.0;
    for fam in [Family::Gaussian { phi: 2.0 }, Family::Binomial, Family::Poisson] {
        worst = worst.max(kl_divergence(&fam, &x, &beta0, &beta0)?);
    }
    checks.push(check("kl_zero_at_truth", worst, 0.0, worst == 0.0, "max over families".into()));

    // delta_n on the two-observation toy design
    let s = 2f64.sqrt();
    let toy = DMatrix::from_column_slice(2, 2, &[s, 0.0, 0.0, s]);
    let d = delta_min(&Family::Gaussian { phi: 1.0 }, &toy, &[1.0, 1.0], 2)?;
    let err = (d.value - 0.5).abs();
    checks.push(check(
        "toy_delta_n",
        d.value,
        0.5,
        err <= 1e-12,
        format!("argmin {:?} over {} supports", d.argmin, d.models),
    ));

    // Gaussian KL closed form
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let phi: f64 = rng.random_range(0.5..4.0);
        let x = gaussian_design(&mut rng, 20, 4);
        let b0: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let kl = kl_divergence(&Family::Gaussian { phi }, &x, &b0, &b)?;
        let diff = &x * (DVector::from_vec(b0) - DVector::from_vec(b));
        let closed = diff.norm_squared() / (2.0 * phi);
        worst = worst.max((kl - closed).abs() / closed.max(1e-300));
    }
    checks.push(check(
        "gaussian_kl_closed_form",
        worst,
        1e-10,
        worst <= 1e-10,
        "max relative error, 200 instances".into(),
    ));

    // deviance identity on nested instances
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let size = rng.random_range(2..=6);
        let inst = nested_instance(&mut rng, 50, 10, 2, size, 1.0)?;
        worst = worst.max(verify_gaussian_deviance_identity(&inst.data, &inst.ctx, &inst.support)?.gap);
    }
    checks.push(check(
        "gaussian_deviance_identity",
        worst,
        1e-7,
        worst <= 1e-7,
        "max gap, 50 nested instances".into(),
    ));

    // chi-square behaviour of Z_alpha
    let draws = z_alpha_draws(&mut rng, 50, 10, 2, 5, 500)?;
    let dof = 3.0;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let se = (2.0 * dof / draws.len() as f64).sqrt();
    checks.push(check(
        "z_alpha_mean",
        mean,
        dof,
        (mean - dof).abs() <= 3.0 * se,
        format!("500 draws, standard error {se:.4}"),
    ));
    let chi = ChiSquared::new(dof).map_err(|e| Error::invalid(e.to_string()))?;
    let ks = ks_statistic(&draws, |v| chi.cdf(v.max(0.0)));
    let crit = ks_critical_1pct(draws.len());
    checks.push(check("z_alpha_ks", ks, crit, ks < crit, "KS statistic vs chi-square(3)".into()));

    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { seed, passed, checks })
}
