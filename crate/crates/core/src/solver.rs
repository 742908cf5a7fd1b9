//! Penalized maximum likelihood by IRLS with coordinate descent.
//!
//! The objective minimized is
//!
//! ```text
//! F(beta) = -l(beta) / n + sum_j p_lambda(|beta_j|)
//! ```
//!
//! Each outer iteration replaces `-l/n` by its second-order expansion at the
//! current iterate (weights `b''(eta_i) / phi`), and the inner loop minimizes
//! the resulting penalized weighted least-squares problem one coordinate at a
//! time with the exact scalar update from [`Penalty::threshold`]. The outer
//! step is backtracked until `F` does not increase, so the objective is
//! monotone along the iterations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::penalty::{Penalty, DEFAULT_SCAD_A};

/// Coefficients below this magnitude are set to exactly zero.
pub const ZERO_SNAP: f64 = 1e-10;
/// Relative slack on `|z| <= level` when deciding that a zero coordinate is
/// stationary; absorbs roundoff at `lambda = lambda_max`.
const STATIONARY_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner_sweeps: usize,
    /// Fit an unpenalized intercept.
    pub intercept: bool,
    /// Lower bound on Binomial working weights `b''(eta)`.
    pub weight_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_outer: 1e-7,
            tol_inner: 1e-8,
            max_outer: 200,
            max_inner_sweeps: 1000,
            intercept: false,
            weight_floor: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub lambda: f64,
    pub beta: Vec<f64>,
    /// Zero unless the intercept option is on.
    pub intercept: f64,
    pub support: Vec<usize>,
    pub deviance: f64,
    pub objective: f64,
    pub outer_iters: usize,
    /// Total coordinate sweeps over all outer iterations.
    pub inner_iters: usize,
    pub converged: bool,
}

impl Fit {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }
}

/// Regularization method along a path. `AdaptiveLasso` runs the two-stage
/// pipeline of [`fit_adaptive_lasso`] at every `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Lasso,
    Scad { a: f64 },
    Mcp { gamma: f64 },
    AdaptiveLasso { a: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Scad { .. } => "scad",
            Method::Mcp { .. } => "mcp",
            Method::AdaptiveLasso { .. } => "adaptive_lasso",
        }
    }

    /// The penalty fitted directly, or stage 1 for the adaptive pipeline.
    pub fn penalty(&self) -> Penalty {
        match *self {
            Method::Lasso | Method::AdaptiveLasso { .. } => Penalty::Lasso,
            Method::Scad { a } => Penalty::Scad { a },
            Method::Mcp { gamma } => Penalty::Mcp { gamma },
        }
    }

    pub fn parse(name: &str, scad_a: f64, mcp_gamma: f64) -> Result<Self> {
        match name {
            "lasso" => Ok(Method::Lasso),
            "scad" => Ok(Method::Scad { a: scad_a }),
            "mcp" => Ok(Method::Mcp { gamma: mcp_gamma }),
            "adaptive_lasso" | "alasso" => Ok(Method::AdaptiveLasso { a: scad_a }),
            other => Err(Error::invalid(format!(
                "unknown penalty '{other}' (expected lasso, scad, mcp, adaptive_lasso)"
            ))),
        }
    }
}

/// Intercept of the null model, `g(mean(y))`.
fn null_intercept(family: &Family, y: &DVector<f64>) -> Result<f64> {
    let ybar = y.mean();
    match family {
        Family::Gaussian { .. } => Ok(ybar),
        Family::Binomial if ybar > 0.0 && ybar < 1.0 => Ok((ybar / (1.0 - ybar)).ln()),
        Family::Poisson if ybar > 0.0 => Ok(ybar.ln()),
        _ => Err(Error::invalid(format!(
            "intercept-only {} model has no finite MLE (mean response {ybar})",
            family.name()
        ))),
    }
}

/// Smallest `lambda` at which the all-zero coefficient vector is stationary.
///
/// Every supported penalty has `p'(0+) = lambda`, so this is the sup-norm of
/// the scaled score at the null model, divided by the adaptive weights when
/// present.
pub fn compute_lambda_max(
    family: &Family,
    data: &Dataset,
    penalty: &Penalty,
    opts: &SolverOptions,
) -> Result<f64> {
    penalty.validate(Some(data.p()))?;
    family.validate_response(data.y())?;
    let mu0 = if opts.intercept {
        family.mean(null_intercept(family, data.y())?)
    } else {
        family.null_mean()
    };
    let resid = data.y().map(|y| y - mu0);
    let scale = data.n() as f64 * family.phi();
    let mut lmax: f64 = 0.0;
    for (j, col) in data.x().column_iter().enumerate() {
        let score = col.dot(&resid).abs() / scale;
        let w = penalty.level(j, 1.0);
        if w > 0.0 {
            lmax = lmax.max(score / w);
        }
    }
    if lmax == 0.0 {
        log::warn!("score at the null model is zero; lambda_max = 0");
    }
    Ok(lmax)
}

/// Penalized fit at one `lambda`.
///
/// Without a warm start, convex penalties start from zero and folded-concave
/// penalties start from the Lasso solution at the same `lambda`.
pub fn fit_penalized(
    family: &Family,
    data: &Dataset,
    penalty: &Penalty,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<Fit> {
    penalty.validate(Some(data.p()))?;
    family.validate_response(data.y())?;
    check_lambda(lambda)?;
    let start_intercept = if opts.intercept {
        null_intercept(family, data.y())?
    } else {
        0.0
    };
    let start = match warm_start {
        Some(w) => {
            if w.len() != data.p() {
                return Err(Error::DimensionMismatch {
                    what: "warm start",
                    expected: data.p(),
                    got: w.len(),
                });
            }
            Start {
                beta: w.to_vec(),
                intercept: start_intercept,
            }
        }
        None if !penalty.is_convex() => {
            let lasso = fit_from(family, data, &Penalty::Lasso, lambda, Start::zero(data.p(), start_intercept), opts)?;
            Start::from_fit(&lasso)
        }
        None => Start::zero(data.p(), start_intercept),
    };
    fit_from(family, data, penalty, lambda, start, opts)
}

/// Both stages of the adaptive Lasso at one `lambda`.
#[derive(Clone, Debug)]
pub struct AdaptiveFit {
    pub lasso: Fit,
    pub weights: Vec<f64>,
    pub fit: Fit,
}

/// Re-weighted adaptive Lasso: a Lasso fit at `lambda`, then a weighted Lasso
/// at the same `lambda` with weights `p'_SCAD(|beta_lasso_j|) / lambda`.
pub fn fit_adaptive_lasso(family: &Family, data: &Dataset, lambda: f64, opts: &SolverOptions) -> Result<Fit> {
    Ok(adaptive_lasso_stages(family, data, lambda, DEFAULT_SCAD_A, None, opts)?.fit)
}

pub(crate) fn adaptive_lasso_stages(
    family: &Family,
    data: &Dataset,
    lambda: f64,
    scad_a: f64,
    lasso_warm: Option<&Fit>,
    opts: &SolverOptions,
) -> Result<AdaptiveFit> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("adaptive Lasso needs lambda > 0, got {lambda}")));
    }
    let scad = Penalty::Scad { a: scad_a };
    scad.validate(None)?;
    let start = match lasso_warm {
        Some(f) => Start::from_fit(f),
        None => Start::zero(
            data.p(),
            if opts.intercept {
                null_intercept(family, data.y())?
            } else {
                0.0
            },
        ),
    };
    let lasso = fit_from(family, data, &Penalty::Lasso, lambda, start, opts)?;
    let weights: Vec<f64> = lasso
        .beta
        .iter()
        .map(|&b| {
            if b == 0.0 {
                1.0
            } else {
                scad.derivative_unchecked(lambda, b.abs()) / lambda
            }
        })
        .collect();
    let weighted = Penalty::AdaptiveLasso {
        weights: weights.clone(),
    };
    let fit = fit_from(family, data, &weighted, lambda, Start::from_fit(&lasso), opts)?;
    Ok(AdaptiveFit { lasso, weights, fit })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must be finite and nonnegative, got {lambda}")))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Start {
    beta: Vec<f64>,
    intercept: f64,
}

impl Start {
    pub(crate) fn zero(p: usize, intercept: f64) -> Self {
        Start {
            beta: vec![0.0; p],
            intercept,
        }
    }

    pub(crate) fn from_fit(fit: &Fit) -> Self {
        Start {
            beta: fit.beta.clone(),
            intercept: fit.intercept,
        }
    }
}

/// Penalized objective `-l/n + sum_j p(|beta_j|)` at a given linear predictor.
pub fn penalized_objective(
    family: &Family,
    y: &DVector<f64>,
    eta: &DVector<f64>,
    penalty: &Penalty,
    lambda: f64,
    beta: &[f64],
) -> f64 {
    -family.log_likelihood_eta(y, eta) / y.len() as f64 + penalty.total(lambda, beta)
}

pub(crate) fn fit_from(
    family: &Family,
    data: &Dataset,
    penalty: &Penalty,
    lambda: f64,
    start: Start,
    opts: &SolverOptions,
) -> Result<Fit> {
    check_lambda(lambda)?;
    let n = data.n();
    let p = data.p();
    let nf = n as f64;
    let phi = family.phi();
    let xs = data.x().as_slice();
    let y = data.y();
    let col = |j: usize| &xs[j * n..(j + 1) * n];

    let Start {
        mut beta,
        mut intercept,
    } = start;
    if !opts.intercept {
        intercept = 0.0;
    }
    let mut eta = data.linear_predictor(&DVector::from_column_slice(&beta))?;
    eta.add_scalar_mut(intercept);
    let mut objective = penalized_objective(family, y, &eta, penalty, lambda, &beta);
    if !objective.is_finite() {
        return Err(Error::Divergence {
            iterations: 0,
            reason: "non-finite objective at the starting point".into(),
            trace: vec![objective],
        });
    }
    let mut trace = vec![objective];

    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut curv = vec![0.0; p];
    let mut total_sweeps = 0;
    let mut converged = false;
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;
        // quadratic expansion at the current iterate
        for i in 0..n {
            let mut var = family.variance(eta[i]);
            if matches!(family, Family::Binomial) {
                var = var.max(opts.weight_floor);
            }
            w[i] = var / phi;
            r[i] = (y[i] - family.mean(eta[i])) / var;
        }
        let r_start = r.clone();
        for (j, c) in curv.iter_mut().enumerate() {
            *c = col(j).iter().zip(&w).map(|(x, wi)| wi * x * x).sum::<f64>() / nf;
        }
        let w_sum: f64 = w.iter().sum::<f64>() / nf;

        let mut cand = beta.clone();
        let mut cand_intercept = intercept;
        let sweeps = coordinate_descent(
            &CdProblem {
                xs,
                n,
                w: &w,
                curv: &curv,
                w_sum,
                penalty,
                lambda,
                intercept: opts.intercept,
                tol: opts.tol_inner,
                max_sweeps: opts.max_inner_sweeps,
            },
            &mut cand,
            &mut cand_intercept,
            &mut r,
        );
        total_sweeps += sweeps;

        // eta moves by the change in fitted values: z - r_new - (z - r_old)
        let d_eta: Vec<f64> = r_start.iter().zip(&r).map(|(a, b)| a - b).collect();
        let d_beta: Vec<f64> = cand.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let d_int = cand_intercept - intercept;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=50 {
            let trial_beta: Vec<f64> = beta.iter().zip(&d_beta).map(|(b, d)| b + step * d).collect();
            let trial_eta = DVector::from_iterator(n, eta.iter().zip(&d_eta).map(|(e, d)| e + step * d));
            let trial_obj = penalized_objective(family, y, &trial_eta, penalty, lambda, &trial_beta);
            if trial_obj.is_finite() && trial_obj <= objective {
                accepted = Some((trial_beta, trial_eta, trial_obj));
                break;
            }
            step *= 0.5;
        }

        let Some((new_beta, _, _)) = accepted else {
            // No descent along the step: either numerically stationary or
            // a genuine failure of the expansion.
            let full_beta: Vec<f64> = beta.iter().zip(&d_beta).map(|(b, d)| b + d).collect();
            let full_eta = DVector::from_iterator(n, eta.iter().zip(&d_eta).map(|(e, d)| e + d));
            let full_obj = penalized_objective(family, y, &full_eta, penalty, lambda, &full_beta);
            trace.push(full_obj);
            if !full_obj.is_finite() {
                return Err(Error::Divergence {
                    iterations: outer,
                    reason: "non-finite objective".into(),
                    trace,
                });
            }
            let rise = full_obj - objective;
            if rise <= 1e-6 * (1.0 + objective.abs()) {
                converged = true;
            } else if penalty.is_convex() {
                return Err(Error::Divergence {
                    iterations: outer,
                    reason: format!("objective increased by {rise:e}"),
                    trace,
                });
            }
            break;
        };

        let max_change = d_beta
            .iter()
            .map(|d| (step * d).abs())
            .fold((step * d_int).abs(), f64::max);
        beta = new_beta;
        intercept += step * d_int;
        // recompute from scratch so rounding in the residual updates does not accumulate
        eta = data.linear_predictor(&DVector::from_column_slice(&beta))?;
        eta.add_scalar_mut(intercept);
        objective = penalized_objective(family, y, &eta, penalty, lambda, &beta);
        trace.push(objective);

        if max_change < opts.tol_outer {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("solver hit max_outer = {} at lambda = {lambda:e}", opts.max_outer);
    }

    for b in beta.iter_mut() {
        if b.abs() < ZERO_SNAP {
            *b = 0.0;
        }
    }
    let support: Vec<usize> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect();
    let beta_vec = DVector::from_column_slice(&beta);
    let mut eta = data.linear_predictor(&beta_vec)?;
    eta.add_scalar_mut(intercept);
    let mu = family.mean_from_eta(&eta);
    let deviance = family.deviance(&mu, y)?;
    let objective = penalized_objective(family, y, &eta, penalty, lambda, &beta);

    Ok(Fit {
        lambda,
        beta,
        intercept,
        support,
        deviance,
        objective,
        outer_iters: outer,
        inner_iters: total_sweeps,
        converged,
    })
}

struct CdProblem<'a> {
    xs: &'a [f64],
    n: usize,
    w: &'a [f64],
    curv: &'a [f64],
    w_sum: f64,
    penalty: &'a Penalty,
    lambda: f64,
    intercept: bool,
    tol: f64,
    max_sweeps: usize,
}

/// Minimizes `1/(2n) sum_i w_i (z_i - x_i beta - b0)^2 + sum_j p(|beta_j|)`
/// where `r = z - X beta - b0` is kept current. Returns the number of sweeps.
fn coordinate_descent(prob: &CdProblem<'_>, beta: &mut [f64], intercept: &mut f64, r: &mut [f64]) -> usize {
    let n = prob.n;
    let nf = n as f64;
    let p = beta.len();
    let mut active: Vec<bool> = beta.iter().map(|b| *b != 0.0).collect();
    let mut sweeps = 0;

    let update = |j: usize, beta: &mut [f64], r: &mut [f64]| -> f64 {
        let v = prob.curv[j];
        if v <= 0.0 {
            return 0.0;
        }
        let x = &prob.xs[j * n..(j + 1) * n];
        let grad: f64 = x
            .iter()
            .zip(prob.w)
            .zip(r.iter())
            .map(|((xi, wi), ri)| xi * wi * ri)
            .sum::<f64>()
            / nf;
        let old = beta[j];
        let level = prob.penalty.level(j, prob.lambda);
        let z = grad + v * old;
        // A zero coordinate satisfying its stationarity condition stays put,
        // even when a nonconvex scalar problem has a distant global minimum.
        // Otherwise the path would leave zero above lambda_max.
        if old == 0.0 && z.abs() <= level * (1.0 + STATIONARY_SLACK) {
            return 0.0;
        }
        let new = prob.penalty.threshold_unchecked(level, z, v);
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            for (ri, xi) in r.iter_mut().zip(x) {
                *ri -= xi * delta;
            }
        }
        delta.abs()
    };
    let update_intercept = |intercept: &mut f64, r: &mut [f64]| -> f64 {
        if !prob.intercept || prob.w_sum <= 0.0 {
            return 0.0;
        }
        let grad: f64 = prob.w.iter().zip(r.iter()).map(|(w, r)| w * r).sum::<f64>() / nf;
        let delta = grad / prob.w_sum;
        if delta != 0.0 {
            *intercept += delta;
            for ri in r.iter_mut() {
                *ri -= delta;
            }
        }
        delta.abs()
    };

    while sweeps < prob.max_sweeps {
        // full sweep
        sweeps += 1;
        let mut max_change = update_intercept(intercept, r);
        let mut grew = false;
        for j in 0..p {
            let d = update(j, beta, r);
            max_change = max_change.max(d);
            if beta[j] != 0.0 && !active[j] {
                active[j] = true;
                grew = true;
            }
        }
        if max_change < prob.tol && !grew {
            break;
        }
        // active-set sweeps
        let set: Vec<usize> = (0..p).filter(|&j| active[j]).collect();
        while sweeps < prob.max_sweeps {
            sweeps += 1;
            let mut max_change = update_intercept(intercept, r);
            for &j in &set {
                max_change = max_change.max(update(j, beta, r));
            }
            if max_change < prob.tol {
                break;
            }
        }
    }
    sweeps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::soft_threshold;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Columns `sqrt(n) e_j` for `j < p`: an orthogonal standardized design.
    fn orthogonal(n: usize, p: usize, y: Vec<f64>) -> Dataset {
        let s = (n as f64).sqrt();
        let x = DMatrix::from_fn(n, p, |i, j| if i == j { s } else { 0.0 });
        Dataset::from_standardized(x, DVector::from_vec(y)).unwrap()
    }

    #[test]
    fn lambda_max_examples() {
        let g = Family::Gaussian { phi: 1.0 };
        let opts = SolverOptions::default();
        let d = orthogonal(2, 1, vec![2f64.sqrt(), 0.0]);
        assert_relative_eq!(compute_lambda_max(&g, &d, &Penalty::Lasso, &opts).unwrap(), 1.0, epsilon = 1e-15);

        let d = orthogonal(2, 1, vec![0.0, 3.0]);
        assert_eq!(compute_lambda_max(&g, &d, &Penalty::Lasso, &opts).unwrap(), 0.0);

        // balanced binary response orthogonal to the column
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 1.0, 1.0]);
        let d = Dataset::from_standardized(x, DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(compute_lambda_max(&Family::Binomial, &d, &Penalty::Lasso, &opts).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_lasso_is_soft_threshold() {
        let y = vec![3.0, -1.0, 0.2, 2.0, 0.7];
        let d = orthogonal(5, 4, y.clone());
        let s = 5f64.sqrt();
        let g = Family::Gaussian { phi: 1.0 };
        for &lambda in &[0.0, 0.1, 0.5, 1.0, 2.0] {
            let fit = fit_penalized(&g, &d, &Penalty::Lasso, lambda, None, &SolverOptions::default()).unwrap();
            assert!(fit.converged);
            for j in 0..4 {
                // x_j^T y / n = s * y_j / 5
                // ||x_j||^2 / n = 1, so beta_j = S(x_j^T y / n, lambda)
                let expected = soft_threshold(s * y[j] / 5.0, lambda);
                assert_relative_eq!(fit.beta[j], expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn large_lambda_gives_empty_support() {
        let d = orthogonal(5, 3, vec![1.0, 4.0, 0.0, 0.0, 2.0]);
        let opts = SolverOptions::default();
        for fam in [Family::Gaussian { phi: 1.0 }, Family::Poisson] {
            let lmax = compute_lambda_max(&fam, &d, &Penalty::Lasso, &opts).unwrap();
            for pen in [Penalty::Lasso, Penalty::scad(), Penalty::mcp()] {
                let fit = fit_penalized(&fam, &d, &pen, lmax * 1.0001, None, &opts).unwrap();
                assert!(fit.support.is_empty(), "{pen:?} {fam:?}");
            }
        }
    }

    #[test]
    fn adaptive_weights_follow_scad_derivative() {
        let d = orthogonal(6, 3, vec![5.0, 0.9, 0.05, 0.0, 0.0, 0.0]);
        let g = Family::Gaussian { phi: 1.0 };
        let lambda = 0.3;
        let st = adaptive_lasso_stages(&g, &d, lambda, DEFAULT_SCAD_A, None, &SolverOptions::default()).unwrap();
        let s = 6f64.sqrt();
        for j in 0..3 {
            let b = st.lasso.beta[j];
            let w = if b == 0.0 {
                1.0
            } else {
                Penalty::scad().derivative(lambda, b.abs()).unwrap() / lambda
            };
            assert_relative_eq!(st.weights[j], w, epsilon = 1e-12);
            let z = s * d.y()[j] / 6.0;
            assert_relative_eq!(st.fit.beta[j], soft_threshold(z, w * lambda), epsilon = 1e-9);
        }
        // the strong coefficient is past a*lambda, hence unpenalized in stage 2
        assert_eq!(st.weights[0], 0.0);
        assert_relative_eq!(st.fit.beta[0], s * 5.0 / 6.0, epsilon = 1e-9);
        // the null coefficient keeps weight 1
        assert_eq!(st.lasso.beta[2], 0.0);
        assert_eq!(st.weights[2], 1.0);
    }

    #[test]
    fn adaptive_lasso_equals_lasso_when_stage_one_is_empty() {
        let d = orthogonal(4, 2, vec![0.3, -0.2, 0.0, 0.0]);
        let g = Family::Gaussian { phi: 1.0 };
        let opts = SolverOptions::default();
        let lambda = compute_lambda_max(&g, &d, &Penalty::Lasso, &opts).unwrap() * 1.5;
        let a = fit_adaptive_lasso(&g, &d, lambda, &opts).unwrap();
        let l = fit_penalized(&g, &d, &Penalty::Lasso, lambda, None, &opts).unwrap();
        assert_eq!(a.beta, l.beta);
        assert!(a.support.is_empty());
    }

    #[test]
    fn intercept_is_unpenalized() {
        let d = orthogonal(4, 2, vec![5.0, 5.0, 5.0, 5.0]);
        let g = Family::Gaussian { phi: 1.0 };
        let opts = SolverOptions {
            intercept: true,
            ..Default::default()
        };
        let fit = fit_penalized(&g, &d, &Penalty::Lasso, 10.0, None, &opts).unwrap();
        assert_relative_eq!(fit.intercept, 5.0, epsilon = 1e-10);
        assert!(fit.support.is_empty());
        assert!(fit.deviance < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let d = orthogonal(3, 2, vec![1.0, 0.0, 0.0]);
        let g = Family::Gaussian { phi: 1.0 };
        let opts = SolverOptions::default();
        assert!(fit_penalized(&g, &d, &Penalty::Lasso, -1.0, None, &opts).is_err());
        assert!(fit_penalized(&g, &d, &Penalty::Lasso, 1.0, Some(&[0.0]), &opts).is_err());
        assert!(fit_adaptive_lasso(&g, &d, 0.0, &opts).is_err());
        assert!(fit_penalized(&Family::Binomial, &d, &Penalty::Lasso, 1.0, None, &opts).is_ok());
        let bad = d.with_response(DVector::from_vec(vec![2.0, 0.0, 0.0])).unwrap();
        assert!(fit_penalized(&Family::Binomial, &bad, &Penalty::Lasso, 1.0, None, &opts).is_err());
    }
}
