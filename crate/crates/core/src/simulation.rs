//! Replicated selection studies on sparse linear and logistic designs.
//!
//! Dimension grows with `n` as `p = floor(exp((n - 20)^0.37))`. The true
//! coefficient vector starts from a fixed five-entry pattern, and extra
//! signals are appended at coordinates 6, 7, ... as `n` grows.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{standardize_columns, Dataset};
use crate::diagnostics::{restricted_mle, DiagnosticsContext};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::path::{fit_gaussian_path, fit_path, select_model, Criterion, PathFit, PathOptions, PhiMode};
use crate::solver::Method;

pub const MIN_N: usize = 100;
pub const LINEAR_SIGMA: f64 = 3.0;
pub const LINEAR_BASE: [f64; 5] = [3.0, 1.5, 0.0, 0.0, 2.0];
pub const LOGISTIC_BASE: [f64; 5] = [-3.0, 1.5, 0.0, 0.0, -2.0];

/// Header of the study CSV.
pub const CSV_HEADER: [&str; 15] = [
    "model",
    "n",
    "p",
    "s",
    "penalty",
    "criterion",
    "replications",
    "failures",
    "percent_correct",
    "overfit_rate",
    "underfit_rate",
    "mean_false_positives",
    "mean_false_negatives",
    "median_relative_model_error",
    "median_chosen_lambda",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Linear,
    Logistic,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Linear => "linear",
            Model::Logistic => "logistic",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Model::Linear),
            "logistic" => Ok(Model::Logistic),
            other => Err(Error::invalid(format!("unknown model '{other}' (expected linear or logistic)"))),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        return Err(Error::invalid(format!("simulation designs need n >= {MIN_N}, got {n}")));
    }
    Ok(())
}

/// `floor(exp((n - 20)^0.37))`.
pub fn dimension_for(n: usize) -> Result<usize> {
    check_n(n)?;
    Ok(((n as f64 - 20.0).powf(0.37)).exp().floor() as usize)
}

pub fn sparsity_for(model: Model, n: usize) -> Result<usize> {
    check_n(n)?;
    let step = match model {
        Model::Linear => 40,
        Model::Logistic => 80,
    };
    Ok(3 + (n - MIN_N) / step)
}

/// True coefficients for `model` at sample size `n`, of length `p(n)`.
pub fn beta0_schedule(model: Model, n: usize) -> Result<Vec<f64>> {
    let p = dimension_for(n)?;
    let extra = sparsity_for(model, n)? - 3;
    let mut beta = vec![0.0; p];
    let base = match model {
        Model::Linear => LINEAR_BASE,
        Model::Logistic => LOGISTIC_BASE,
    };
    beta[..5].copy_from_slice(&base);
    for k in 0..extra {
        beta[5 + k] = match model {
            Model::Linear => 2.5,
            Model::Logistic if k % 2 == 0 => 2.0,
            Model::Logistic => -2.0,
        };
    }
    Ok(beta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub model: Model,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub beta0: Vec<f64>,
    /// Noise standard deviation; linear model only.
    pub sigma: f64,
    pub seed: u64,
}

impl SimDesign {
    pub fn new(model: Model, n: usize, seed: u64) -> Result<Self> {
        let beta0 = beta0_schedule(model, n)?;
        Ok(SimDesign {
            model,
            n,
            p: beta0.len(),
            s: sparsity_for(model, n)?,
            beta0,
            sigma: LINEAR_SIGMA,
            seed,
        })
    }

    /// Family of the data-generating model (Gaussian with `phi = sigma^2`).
    pub fn true_family(&self) -> Family {
        match self.model {
            Model::Linear => Family::Gaussian {
                phi: self.sigma * self.sigma,
            },
            Model::Logistic => Family::Binomial,
        }
    }
}

/// Draws a dataset: i.i.d. standard normal rows, columns standardized, then
/// the response from the standardized design.
pub fn gen_dataset(design: &SimDesign) -> Result<(Dataset, DiagnosticsContext)> {
    check_n(design.n)?;
    let (n, p) = (design.n, design.p);
    if design.beta0.len() != p {
        return Err(Error::DimensionMismatch {
            what: "beta0",
            expected: p,
            got: design.beta0.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut raw = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            raw[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let x = standardize_columns(&raw).x;
    drop(raw);
    let ctx = DiagnosticsContext::new(design.true_family(), &x, design.beta0.clone())?;
    let y = match design.model {
        Model::Linear => DVector::from_iterator(
            n,
            ctx.mu0
                .iter()
                .map(|m| m + design.sigma * rng.sample::<f64, _>(StandardNormal)),
        ),
        Model::Logistic => DVector::from_iterator(
            n,
            ctx.mu0
                .iter()
                .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 }),
        ),
    };
    Ok((Dataset::from_standardized(x, y)?, ctx))
}

/// `(beta_hat - beta0)' sigma (beta_hat - beta0)`.
pub fn model_error(beta_hat: &[f64], beta0: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    let p = beta0.len();
    if beta_hat.len() != p {
        return Err(Error::DimensionMismatch {
            what: "beta_hat",
            expected: p,
            got: beta_hat.len(),
        });
    }
    if sigma.shape() != (p, p) {
        return Err(Error::DimensionMismatch {
            what: "sigma rows",
            expected: p,
            got: sigma.nrows(),
        });
    }
    let d = DVector::from_iterator(p, beta_hat.iter().zip(beta0).map(|(a, b)| a - b));
    Ok(d.dot(&(sigma * &d)))
}

/// Model error with `sigma = I`.
pub fn model_error_identity(beta_hat: &[f64], beta0: &[f64]) -> Result<f64> {
    if beta_hat.len() != beta0.len() {
        return Err(Error::DimensionMismatch {
            what: "beta_hat",
            expected: beta0.len(),
            got: beta_hat.len(),
        });
    }
    Ok(beta_hat.iter().zip(beta0).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportClass {
    Exact,
    Overfit,
    Underfit,
}

/// Both index sets are sorted ascending.
pub fn classify_support(selected: &[usize], alpha0: &[usize]) -> SupportClass {
    let covers = alpha0.iter().all(|j| selected.binary_search(j).is_ok());
    if !covers {
        SupportClass::Underfit
    } else if selected.len() == alpha0.len() {
        SupportClass::Exact
    } else {
        SupportClass::Overfit
    }
}

/// How a support is chosen from a fitted path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    Gic(Criterion),
    /// Always returns the true support. Serves as a reference.
    Oracle,
}

impl SelectionRule {
    pub fn name(&self) -> String {
        match self {
            SelectionRule::Gic(c) => c.name(),
            SelectionRule::Oracle => "oracle".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: Model,
    pub n_grid: Vec<usize>,
    pub penalties: Vec<Method>,
    pub rules: Vec<SelectionRule>,
    pub reps: usize,
    pub base_seed: u64,
    /// Gaussian dispersion used in the deviance; ignored for logistic.
    pub phi: PhiMode,
    pub path: PathOptions,
}

impl StudyConfig {
    pub fn new(model: Model, n_grid: Vec<usize>, reps: usize, base_seed: u64) -> Self {
        StudyConfig {
            model,
            n_grid,
            penalties: vec![Method::Scad { a: crate::penalty::DEFAULT_SCAD_A }],
            rules: vec![
                SelectionRule::Gic(Criterion::Bic),
                SelectionRule::Gic(Criterion::GicLll),
            ],
            reps,
            base_seed,
            phi: PhiMode::Known(LINEAR_SIGMA * LINEAR_SIGMA),
            path: PathOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.n_grid.is_empty() || self.penalties.is_empty() || self.rules.is_empty() {
            return Err(Error::invalid("need at least one n, penalty and criterion"));
        }
        for &n in &self.n_grid {
            check_n(n)?;
        }
        for m in &self.penalties {
            if matches!(m, Method::AdaptiveLasso { .. }) {
                continue;
            }
            m.penalty().validate(None)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: Model,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub penalty: String,
    pub criterion: String,
    /// Replications that completed.
    pub replications: usize,
    /// Replications excluded because a path fit or the oracle refit failed,
    /// plus replications whose refit on the selected support failed. The
    /// latter stay in every rate and enter the median model error as +inf.
    pub failures: usize,
    pub percent_correct: f64,
    pub overfit_rate: f64,
    pub underfit_rate: f64,
    pub mean_false_positives: f64,
    pub mean_false_negatives: f64,
    pub median_relative_model_error: f64,
    pub median_chosen_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub model: Model,
    pub base_seed: u64,
    pub reps: usize,
    pub phi: String,
    pub signal_placement: String,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug)]
struct CellOutcome {
    class: SupportClass,
    false_positives: usize,
    false_negatives: usize,
    relative_model_error: Option<f64>,
    lambda: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn fit_study_path(cfg: &StudyConfig, data: &Dataset, method: Method) -> Result<PathFit> {
    match cfg.model {
        Model::Linear => fit_gaussian_path(data, method, cfg.phi, &cfg.path),
        Model::Logistic => fit_path(&Family::Binomial, data, method, &cfg.path),
    }
}

/// One replication: every (penalty, rule) cell in row-major order.
fn replicate(cfg: &StudyConfig, design: &SimDesign) -> Result<Vec<CellOutcome>> {
    let (data, ctx) = gen_dataset(design)?;
    let family = match cfg.model {
        Model::Linear => Family::gaussian(1.0)?,
        Model::Logistic => Family::Binomial,
    };
    let alpha0 = ctx.alpha0.clone();
    let n = data.n();
    let p = data.p();

    // refits are shared between cells selecting the same support
    let mut refits: HashMap<Vec<usize>, Option<f64>> = HashMap::new();
    let mut refit_error = |support: &[usize]| -> Option<f64> {
        *refits.entry(support.to_vec()).or_insert_with(|| {
            if support.len() >= n {
                return None;
            }
            match restricted_mle(&family, &data, support) {
                Ok(fit) => model_error_identity(&fit.beta, &ctx.beta0).ok(),
                Err(e) => {
                    log::debug!("refit on {} covariates failed: {e}", support.len());
                    None
                }
            }
        })
    };
    let oracle_error = refit_error(&alpha0)
        .ok_or_else(|| Error::invalid("refit on the true support failed"))?;

    let mut out = Vec::with_capacity(cfg.penalties.len() * cfg.rules.len());
    for &method in &cfg.penalties {
        let path = fit_study_path(cfg, &data, method)?;
        for rule in &cfg.rules {
            let (support, lambda) = match rule {
                SelectionRule::Gic(c) => {
                    let r = select_model(&path, *c, n, p)?;
                    (r.chosen_support, Some(r.chosen_lambda))
                }
                SelectionRule::Oracle => (alpha0.clone(), None),
            };
            let fp = support.iter().filter(|j| alpha0.binary_search(j).is_err()).count();
            let fnc = alpha0.iter().filter(|j| support.binary_search(j).is_err()).count();
            out.push(CellOutcome {
                class: classify_support(&support, &alpha0),
                false_positives: fp,
                false_negatives: fnc,
                relative_model_error: refit_error(&support).map(|e| e / oracle_error),
                lambda,
            });
        }
    }
    Ok(out)
}

fn summarize(
    cfg: &StudyConfig,
    design: &SimDesign,
    outcomes: &[Vec<CellOutcome>],
    rep_failures: usize,
) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    let mut idx = 0;
    for method in &cfg.penalties {
        for rule in &cfg.rules {
            let col: Vec<&CellOutcome> = outcomes.iter().map(|o| &o[idx]).collect();
            idx += 1;
            let r = col.len();
            let rate = |c: SupportClass| {
                if r == 0 {
                    f64::NAN
                } else {
                    col.iter().filter(|o| o.class == c).count() as f64 / r as f64
                }
            };
            let mean = |f: &dyn Fn(&CellOutcome) -> usize| {
                if r == 0 {
                    f64::NAN
                } else {
                    col.iter().map(|o| f(o) as f64).sum::<f64>() / r as f64
                }
            };
            // a refit that does not exist has unbounded model error
            let mut rme: Vec<f64> = col
                .iter()
                .map(|o| o.relative_model_error.unwrap_or(f64::INFINITY))
                .collect();
            let refit_failures = col.iter().filter(|o| o.relative_model_error.is_none()).count();
            let mut lambdas: Vec<f64> = col.iter().filter_map(|o| o.lambda).collect();
            cells.push(CellSummary {
                model: cfg.model,
                n: design.n,
                p: design.p,
                s: design.s,
                penalty: method.name().to_string(),
                criterion: rule.name(),
                replications: r,
                failures: rep_failures + refit_failures,
                percent_correct: rate(SupportClass::Exact),
                overfit_rate: rate(SupportClass::Overfit),
                underfit_rate: rate(SupportClass::Underfit),
                mean_false_positives: mean(&|o| o.false_positives),
                mean_false_negatives: mean(&|o| o.false_negatives),
                median_relative_model_error: median(&mut rme),
                median_chosen_lambda: median(&mut lambdas),
            });
        }
    }
    cells
}

/// Seed of replication `rep`: the index XORed into a SplitMix64 scramble of
/// the base seed. XOR with the raw base would make small base seeds share
/// replications (bases 1 and 2 both cover seeds 0..127 over 100 replications).
pub fn replication_seed(base_seed: u64, rep: usize) -> u64 {
    let mut z = base_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) ^ rep as u64
}

/// Runs the study on the current rayon pool. Replication `r` uses seed
/// `replication_seed(base_seed, r)`; results are reduced in replication order, so the report
/// does not depend on the number of threads.
pub fn run_study(cfg: &StudyConfig) -> Result<SimReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        let template = SimDesign::new(cfg.model, n, cfg.base_seed)?;
        log::info!(
            "{} n={} p={} s={}: {} replications",
            cfg.model,
            n,
            template.p,
            template.s,
            cfg.reps
        );
        let results: Vec<Result<Vec<CellOutcome>>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let design = SimDesign {
                    seed: replication_seed(cfg.base_seed, rep),
                    ..template.clone()
                };
                replicate(cfg, &design)
            })
            .collect();
        let mut outcomes = Vec::with_capacity(cfg.reps);
        let mut failures = 0;
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(o) => outcomes.push(o),
                Err(e) => {
                    log::warn!("n={n} replication {rep} excluded: {e}");
                    failures += 1;
                }
            }
        }
        cells.extend(summarize(cfg, &template, &outcomes, failures));
    }
    Ok(SimReport {
        model: cfg.model,
        base_seed: cfg.base_seed,
        reps: cfg.reps,
        phi: match cfg.model {
            Model::Linear => cfg.phi.to_string(),
            Model::Logistic => "1".into(),
        },
        signal_placement: "extra nonzero coefficients at coordinates 6, 7, ...".into(),
        cells,
    })
}

impl SimReport {
    pub fn cell(&self, n: usize, penalty: &str, criterion: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.penalty == penalty && c.criterion == criterion)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for c in &self.cells {
            w.write_record([
                c.model.name().to_string(),
                c.n.to_string(),
                c.p.to_string(),
                c.s.to_string(),
                c.penalty.clone(),
                c.criterion.clone(),
                c.replications.to_string(),
                c.failures.to_string(),
                c.percent_correct.to_string(),
                c.overfit_rate.to_string(),
                c.underfit_rate.to_string(),
                c.mean_false_positives.to_string(),
                c.mean_false_negatives.to_string(),
                c.median_relative_model_error.to_string(),
                c.median_chosen_lambda.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Cells nested as `n -> penalty -> criterion`.
    pub fn to_json(&self) -> Result<String> {
        let mut nested: BTreeMap<usize, BTreeMap<&str, BTreeMap<&str, &CellSummary>>> = BTreeMap::new();
        for c in &self.cells {
            nested
                .entry(c.n)
                .or_default()
                .entry(&c.penalty)
                .or_default()
                .insert(&c.criterion, c);
        }
        let doc = serde_json::json!({
            "model": self.model,
            "base_seed": self.base_seed,
            "reps": self.reps,
            "phi": self.phi,
            "signal_placement": self.signal_placement,
            "results": nested,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}
