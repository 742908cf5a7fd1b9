//! Regularization paths and tuning-parameter selection by GIC.
//!
//! A path runs from `lambda_max` (empty model) down to `lambda_min`, the
//! first `lambda` whose fit selects `floor(3 sqrt(n))` covariates, over a
//! log-spaced grid. Each candidate is scored by
//!
//! ```text
//! GIC(lambda) = (D(mu_lambda; y) + a_n |support(lambda)|) / n
//! ```
//!
//! and the minimizer is selected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::solver::{self, compute_lambda_max, Fit, Method, SolverOptions, Start};

pub const DEFAULT_GRID_COUNT: usize = 200;
pub const LAMBDA_DESCENT: f64 = 0.95;
pub const LAMBDA_FLOOR_RATIO: f64 = 1e-4;
/// Binomial and Poisson paths end before the first fit whose deviance drops
/// below this share of the null deviance. Such fits (nearly) separate the
/// data, and the estimates diverge along flat penalty tails.
pub const SATURATION_RATIO: f64 = 0.01;

/// `floor(3 sqrt(n))`, the support size that fixes `lambda_min`.
pub fn support_target(n: usize) -> usize {
    (3.0 * (n as f64).sqrt()).floor() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub grid_count: usize,
    /// Defaults to [`support_target`] when unset.
    pub support_cap: Option<usize>,
    pub solver: SolverOptions,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            grid_count: DEFAULT_GRID_COUNT,
            support_cap: None,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFit {
    pub method: Method,
    pub lambdas: Vec<f64>,
    pub fits: Vec<Fit>,
    pub support_cap: usize,
    /// Dispersion used for the stored deviances.
    pub phi: f64,
}

impl PathFit {
    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    /// Copy with deviances expressed on dispersion `phi`.
    pub fn with_dispersion(&self, phi: f64) -> Result<PathFit> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::invalid(format!("dispersion must be positive, got {phi}")));
        }
        let ratio = self.phi / phi;
        let mut out = self.clone();
        for f in &mut out.fits {
            f.deviance *= ratio;
        }
        out.phi = phi;
        Ok(out)
    }

    /// Plug-in Gaussian dispersion `RSS / n` from the largest model on the
    /// path (the last one among ties).
    pub fn plug_in_dispersion(&self, n: usize) -> Result<f64> {
        let largest = self
            .fits
            .iter()
            .rev()
            .max_by_key(|f| f.support.len())
            .ok_or_else(|| Error::invalid("empty path"))?;
        let rss = largest.deviance * self.phi;
        if rss <= 0.0 {
            return Err(Error::invalid("largest model fits exactly; plug-in dispersion is zero"));
        }
        Ok(rss / n as f64)
    }
}

/// `count` log-equally-spaced values from `lambda_max` down to `lambda_min`.
pub fn build_lambda_grid(lambda_min: f64, lambda_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(lambda_min.is_finite() && lambda_min > 0.0) {
        return Err(Error::invalid(format!("lambda_min must be positive, got {lambda_min}")));
    }
    if !(lambda_max.is_finite() && lambda_max > lambda_min) {
        return Err(Error::invalid(format!(
            "lambda_max ({lambda_max}) must exceed lambda_min ({lambda_min})"
        )));
    }
    if count < 2 {
        return Err(Error::invalid("grid needs at least two values"));
    }
    let (hi, lo) = (lambda_max.ln(), lambda_min.ln());
    let last = (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count)
        .map(|k| (hi + (lo - hi) * k as f64 / last).exp())
        .collect();
    grid[0] = lambda_max;
    grid[count - 1] = lambda_min;
    Ok(grid)
}

/// Warm-started sequence of fits for one method.
struct PathRunner<'a> {
    family: &'a Family,
    data: &'a Dataset,
    method: Method,
    opts: &'a SolverOptions,
    prev: Option<Fit>,
    prev_lasso: Option<Fit>,
    null_deviance: f64,
}

impl<'a> PathRunner<'a> {
    fn new(family: &'a Family, data: &'a Dataset, method: Method, opts: &'a SolverOptions) -> Result<Self> {
        // a lasso fit at lambda_max is the null model, intercept included
        let lambda_max = compute_lambda_max(family, data, &crate::penalty::Penalty::Lasso, opts)?;
        let null = solver::fit_penalized(family, data, &crate::penalty::Penalty::Lasso, lambda_max, None, opts)?;
        Ok(PathRunner {
            family,
            data,
            method,
            opts,
            prev: None,
            prev_lasso: None,
            null_deviance: null.deviance,
        })
    }

    fn saturated(&self, fit: &Fit) -> bool {
        !matches!(self.family, Family::Gaussian { .. }) && fit.deviance < SATURATION_RATIO * self.null_deviance
    }

    fn fit(&mut self, lambda: f64) -> Result<Fit> {
        let result = match self.method {
            Method::AdaptiveLasso { a } => solver::adaptive_lasso_stages(
                self.family,
                self.data,
                lambda,
                a,
                self.prev_lasso.as_ref(),
                self.opts,
            )
            .map(|st| {
                self.prev_lasso = Some(st.lasso);
                st.fit
            }),
            _ => {
                let penalty = self.method.penalty();
                match &self.prev {
                    Some(prev) => {
                        solver::fit_from(self.family, self.data, &penalty, lambda, Start::from_fit(prev), self.opts)
                    }
                    None => solver::fit_penalized(self.family, self.data, &penalty, lambda, None, self.opts),
                }
            }
        };
        let fit = result.map_err(|e| e.at_lambda(lambda))?;
        self.prev = Some(fit.clone());
        Ok(fit)
    }
}

/// Descends `lambda <- 0.95 lambda` from `lambda_max` until the fitted support
/// reaches `target` covariates, the deviance saturates, or
/// `lambda / lambda_max < 1e-4`.
pub fn determine_lambda_min(
    family: &Family,
    data: &Dataset,
    method: Method,
    lambda_max: f64,
    target: usize,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::invalid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let floor = lambda_max * LAMBDA_FLOOR_RATIO;
    let mut runner = PathRunner::new(family, data, method, opts)?;
    let mut lambda = lambda_max;
    loop {
        lambda *= LAMBDA_DESCENT;
        if lambda < floor {
            log::warn!(
                "support never reached {target} covariates above lambda_max * {LAMBDA_FLOOR_RATIO}; using the floor"
            );
            return Ok(floor);
        }
        let fit = runner.fit(lambda)?;
        if fit.support.len() >= target {
            return Ok(lambda);
        }
        if runner.saturated(&fit) {
            log::info!(
                "deviance saturated at {} covariates, lambda/lambda_max = {:.3e}",
                fit.support.len(),
                lambda / lambda_max
            );
            return Ok(lambda);
        }
    }
}

/// Fits `method` on a given descending grid with warm starts. Stops before
/// the first fit whose support exceeds `support_cap` or whose Binomial or
/// Poisson deviance has saturated.
pub fn fit_path_on_grid(
    family: &Family,
    data: &Dataset,
    method: Method,
    lambdas: &[f64],
    support_cap: usize,
    opts: &SolverOptions,
) -> Result<PathFit> {
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("lambda grid must be strictly decreasing"));
    }
    let mut runner = PathRunner::new(family, data, method, opts)?;
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let fit = runner.fit(lambda)?;
        if fit.support.len() > support_cap {
            break;
        }
        if runner.saturated(&fit) {
            break;
        }
        fits.push(fit);
    }
    Ok(PathFit {
        method,
        lambdas: lambdas[..fits.len()].to_vec(),
        fits,
        support_cap,
        phi: family.phi(),
    })
}

/// Full path: `lambda_max`, `lambda_min`, the log grid, and warm-started fits.
pub fn fit_path(family: &Family, data: &Dataset, method: Method, opts: &PathOptions) -> Result<PathFit> {
    let lambda_max = compute_lambda_max(family, data, &method.penalty(), &opts.solver)?;
    if lambda_max == 0.0 {
        return Err(Error::invalid("score is zero at the null model; the path is degenerate"));
    }
    let cap = opts.support_cap.unwrap_or_else(|| support_target(data.n()));
    let lambda_min = determine_lambda_min(family, data, method, lambda_max, cap, &opts.solver)?;
    let grid = build_lambda_grid(lambda_min, lambda_max, opts.grid_count)?;
    fit_path_on_grid(family, data, method, &grid, cap, &opts.solver)
}

/// How the Gaussian dispersion entering the deviance is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum PhiMode {
    Known(f64),
    /// `RSS / n` of the largest model on the path.
    PlugIn,
}

impl fmt::Display for PhiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiMode::Known(v) => write!(f, "known:{v}"),
            PhiMode::PlugIn => f.write_str("plugin"),
        }
    }
}

impl FromStr for PhiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "plugin" {
            return Ok(PhiMode::PlugIn);
        }
        let v = s
            .strip_prefix("known:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::invalid(format!("bad dispersion '{s}' (expected known:<value> or plugin)")))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("dispersion must be positive, got {v}")));
        }
        Ok(PhiMode::Known(v))
    }
}

/// Gaussian path on the least-squares scale: the solver runs with unit
/// dispersion (loss `RSS / 2n`) and `phi` only rescales the deviances, so the
/// candidate models do not depend on the dispersion. SCAD and MCP are not
/// scale-equivariant, and with a large `phi` inside the loss their scalar
/// updates become nonconvex. `PlugIn` takes `phi = RSS / n` of the largest
/// model on the path. Lambdas refer to the unit-dispersion scale.
pub fn fit_gaussian_path(data: &Dataset, method: Method, phi: PhiMode, opts: &PathOptions) -> Result<PathFit> {
    let path = fit_path(&Family::gaussian(1.0)?, data, method, opts)?;
    let phi = match phi {
        PhiMode::Known(v) => v,
        PhiMode::PlugIn => path.plug_in_dispersion(data.n())?,
    };
    path.with_dispersion(phi)
}

/// Model-complexity penalty `a_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// 2
    Aic,
    /// log n
    Bic,
    /// (log log n) log n
    Mbic,
    /// log p
    Logp,
    /// (log log n) log p
    GicLll,
    /// Fixed constant.
    Custom(f64),
}

impl Criterion {
    pub const NAMED: [Criterion; 5] = [
        Criterion::Aic,
        Criterion::Bic,
        Criterion::Mbic,
        Criterion::Logp,
        Criterion::GicLll,
    ];

    pub fn name(&self) -> String {
        match self {
            Criterion::Aic => "aic".into(),
            Criterion::Bic => "bic".into(),
            Criterion::Mbic => "mbic".into(),
            Criterion::Logp => "logp".into(),
            Criterion::GicLll => "gic_lll".into(),
            Criterion::Custom(a) => format!("custom({a})"),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "mbic" => Ok(Criterion::Mbic),
            "logp" => Ok(Criterion::Logp),
            "gic_lll" => Ok(Criterion::GicLll),
            other => Err(Error::invalid(format!(
                "unknown criterion '{other}' (expected aic, bic, mbic, logp, gic_lll)"
            ))),
        }
    }
}

/// `a_n` for a criterion at sample size `n` and dimension `p`.
pub fn complexity_constant(criterion: Criterion, n: usize, p: usize) -> Result<f64> {
    let (nf, pf) = (n as f64, p as f64);
    let needs_loglog = matches!(criterion, Criterion::Mbic | Criterion::GicLll);
    if needs_loglog && n < 3 {
        return Err(Error::invalid(format!("{criterion} needs n >= 3 so that log log n > 0, got {n}")));
    }
    if matches!(criterion, Criterion::Logp | Criterion::GicLll) && p < 2 {
        return Err(Error::invalid(format!("{criterion} needs p >= 2, got {p}")));
    }
    Ok(match criterion {
        Criterion::Aic => 2.0,
        Criterion::Bic => nf.ln(),
        Criterion::Mbic => nf.ln().ln() * nf.ln(),
        Criterion::Logp => pf.ln(),
        Criterion::GicLll => nf.ln().ln() * pf.ln(),
        Criterion::Custom(a) => {
            if !(a >= 0.0) {
                return Err(Error::invalid(format!("a_n must be nonnegative, got {a}")));
            }
            a
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub criterion: String,
    pub a_n: f64,
    pub chosen_index: usize,
    pub chosen_lambda: f64,
    pub chosen_support: Vec<usize>,
    pub gic_values: Vec<f64>,
}

/// `(D_i + a_n |support_i|) / n` for every path entry.
pub fn gic_values(path: &PathFit, a_n: f64, n: usize) -> Vec<f64> {
    path.fits
        .iter()
        .map(|f| (f.deviance + a_n * f.support.len() as f64) / n as f64)
        .collect()
}

/// Minimizes GIC over the path. Ties go to the smaller support, then to the
/// larger `lambda`.
pub fn select_model(path: &PathFit, criterion: Criterion, n: usize, p: usize) -> Result<SelectionReport> {
    if path.is_empty() {
        return Err(Error::invalid("cannot select from an empty path"));
    }
    let a_n = complexity_constant(criterion, n, p)?;
    let gic = gic_values(path, a_n, n);
    let mut best = 0;
    for i in 1..gic.len() {
        let (fi, fb) = (&path.fits[i], &path.fits[best]);
        let better = gic[i] < gic[best]
            || (gic[i] == gic[best]
                && (fi.support.len() < fb.support.len()
                    || (fi.support.len() == fb.support.len() && path.lambdas[i] > path.lambdas[best])));
        if better {
            best = i;
        }
    }
    Ok(SelectionReport {
        criterion: criterion.name(),
        a_n,
        chosen_index: best,
        chosen_lambda: path.lambdas[best],
        chosen_support: path.fits[best].support.clone(),
        gic_values: gic,
    })
}
