//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for failures during
//! computation.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use crate::dataio::{self, accuracy_profile, load_matrix, load_vector, oracle_profile, ProfileMode, TableFormat};
use crate::dataset::Dataset;
use crate::diagnostics::suite;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::path::{fit_gaussian_path, fit_path, gic_values, select_model, Criterion, PathFit, PathOptions, PhiMode};
use crate::penalty::{DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A};
use crate::plot::LinePlot;
use crate::simulation::{run_study, CellSummary, Model, SelectionRule, SimReport, StudyConfig};
use crate::solver::{fit_adaptive_lasso, fit_penalized, Method, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;

/// Header of the per-lambda path CSV.
pub const PATH_CSV_HEADER: [&str; 4] = ["lambda", "support_size", "deviance", "converged"];
/// Header of the per-lambda GIC CSV written by `select`.
pub const GIC_CSV_HEADER: [&str; 4] = ["lambda", "support_size", "deviance", "gic"];

#[derive(Parser, Debug)]
#[command(name = "gicselect", version, about = "Penalized GLM paths with tuning by generalized information criteria")]
pub struct Cli {
    /// Worker threads for `simulate` (falls back to GICSELECT_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit at a single lambda and write the fit as JSON.
    Fit(FitArgs),
    /// Fit the full regularization path and write one CSV row per lambda.
    Path(PathArgs),
    /// Fit the path and pick lambda by one or more criteria.
    Select(SelectArgs),
    /// Replicated simulation study with CSV, JSON and SVG output.
    Simulate(SimulateArgs),
    /// Self-check of the refit diagnostics on toy designs.
    Diagnose(DiagnoseArgs),
    /// Accuracy profile of a score ranking against 0/1 labels.
    Profile(ProfileArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Design matrix, one row per observation.
    #[arg(long)]
    pub data: PathBuf,
    /// Response vector (one column or one row).
    #[arg(long)]
    pub response: PathBuf,
    /// Input files start with a header row.
    #[arg(long)]
    pub header: bool,
    /// csv or tsv; defaults to the file extension.
    #[arg(long)]
    pub format: Option<TableFormat>,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// gaussian, binomial or poisson.
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    /// lasso, scad, mcp or adaptive_lasso.
    #[arg(long, default_value = "scad")]
    pub penalty: String,
    #[arg(long, default_value_t = DEFAULT_SCAD_A)]
    pub scad_a: f64,
    #[arg(long, default_value_t = DEFAULT_MCP_GAMMA)]
    pub mcp_gamma: f64,
    /// Gaussian dispersion: known:<value> or plugin.
    #[arg(long, default_value = "known:1")]
    pub phi: PhiMode,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Fit an unpenalized intercept.
    #[arg(long)]
    pub intercept: bool,
    /// Matrix of new observations to score with the fitted linear predictor.
    #[arg(long, requires = "scores_out")]
    pub predict: Option<PathBuf>,
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
    /// Output JSON file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = crate::path::DEFAULT_GRID_COUNT)]
    pub grid_count: usize,
    /// Output CSV file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = crate::path::DEFAULT_GRID_COUNT)]
    pub grid_count: usize,
    /// Comma-separated: aic, bic, mbic, logp, gic_lll.
    #[arg(long, value_delimiter = ',', default_value = "gic_lll")]
    pub criteria: Vec<Criterion>,
    #[arg(long, default_value = "gicselect_output")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// linear or logistic.
    #[arg(long, default_value = "linear")]
    pub model: Model,
    /// Comma-separated sample sizes, each at least 100.
    #[arg(long, value_delimiter = ',', default_value = "100,140,180,220,260,300,340,380,420,460,500")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated penalties.
    #[arg(long, value_delimiter = ',', default_value = "scad")]
    pub penalties: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "bic,gic_lll")]
    pub criteria: Vec<Criterion>,
    #[arg(long, default_value_t = DEFAULT_SCAD_A)]
    pub scad_a: f64,
    #[arg(long, default_value_t = DEFAULT_MCP_GAMMA)]
    pub mcp_gamma: f64,
    /// Gaussian dispersion for the linear model: known:<value> or plugin.
    #[arg(long, default_value = "known:9")]
    pub phi: PhiMode,
    #[arg(long, default_value_t = crate::path::DEFAULT_GRID_COUNT)]
    pub grid_count: usize,
    #[arg(long, default_value = "gicselect_output")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// One score per case; larger means more likely positive.
    #[arg(long)]
    pub scores: PathBuf,
    /// 0/1 labels aligned with the scores.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// capture (share of all positives found) or precision.
    #[arg(long, default_value = "capture")]
    pub mode: ProfileMode,
    #[arg(long, default_value = "gicselect_output")]
    pub out_dir: PathBuf,
}

/// Gaussian models are fitted on the least-squares scale (unit dispersion);
/// `phi` only scales their deviances and criteria.
struct Resolved {
    family: Family,
    method: Method,
    phi: Option<PhiMode>,
}

fn resolve_model(m: &ModelArgs) -> Result<Resolved> {
    let (family, phi) = match m.family.as_str() {
        "gaussian" => {
            if let PhiMode::Known(v) = m.phi {
                Family::gaussian(v)?;
            }
            (Family::gaussian(1.0)?, Some(m.phi))
        }
        "binomial" => (Family::Binomial, None),
        "poisson" => (Family::Poisson, None),
        other => {
            return Err(Error::invalid(format!(
                "unknown family '{other}' (expected gaussian, binomial, poisson)"
            )))
        }
    };
    let method = Method::parse(&m.penalty, m.scad_a, m.mcp_gamma)?;
    match method {
        Method::AdaptiveLasso { a } | Method::Scad { a } if a <= 2.0 => {
            return Err(Error::invalid(format!("SCAD parameter a must exceed 2, got {a}")))
        }
        Method::Mcp { gamma } if gamma <= 1.0 => {
            return Err(Error::invalid(format!("MCP parameter gamma must exceed 1, got {gamma}")))
        }
        _ => {}
    }
    Ok(Resolved { family, method, phi })
}

fn load_data(d: &DataArgs) -> Result<Dataset> {
    let fmt = |p: &Path| d.format.unwrap_or_else(|| TableFormat::from_path(p));
    let x = load_matrix(&d.data, fmt(&d.data), d.header)?;
    let y = load_vector(&d.response, fmt(&d.response), d.header)?;
    dataio::dataset_from_tables(&x, y)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let r = resolve_model(&args.model)?;
    let data = load_data(&args.data)?;
    let opts = SolverOptions {
        intercept: args.intercept,
        ..SolverOptions::default()
    };
    let fit = match r.method {
        Method::AdaptiveLasso { .. } => fit_adaptive_lasso(&r.family, &data, args.lambda, &opts)?,
        m => fit_penalized(&r.family, &data, &m.penalty(), args.lambda, None, &opts)?,
    };
    let mut fit = fit;
    let phi = match r.phi {
        Some(PhiMode::Known(v)) => {
            fit.deviance /= v;
            Some(v)
        }
        _ => None,
    };
    let raw = data.to_raw_coefficients(&fit.beta_vector());
    let doc = json!({
        "family": r.family,
        "phi": phi,
        "penalty": r.method,
        "n": data.n(),
        "p": data.p(),
        "fit": fit,
        "raw_coefficients": raw.as_slice(),
    });
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    w.flush()?;
    if let (Some(pred), Some(out)) = (&args.predict, &args.scores_out) {
        let table = load_matrix(pred, args.data.format.unwrap_or_else(|| TableFormat::from_path(pred)), args.data.header)?;
        if table.col_count() != data.p() {
            return Err(Error::DimensionMismatch {
                what: "prediction columns",
                expected: data.p(),
                got: table.col_count(),
            });
        }
        let scores = &table.values * &raw + DVector::from_element(table.row_count(), fit.intercept);
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["score"])?;
        for s in scores.iter() {
            w.write_record([s.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn compute_path(data: &Dataset, r: &Resolved, grid_count: usize) -> Result<PathFit> {
    let opts = PathOptions {
        grid_count,
        ..PathOptions::default()
    };
    match r.phi {
        Some(phi) => fit_gaussian_path(data, r.method, phi, &opts),
        None => fit_path(&r.family, data, r.method, &opts),
    }
}

fn run_path(args: &PathArgs) -> Result<()> {
    let r = resolve_model(&args.model)?;
    let data = load_data(&args.data)?;
    let path = compute_path(&data, &r, args.grid_count)?;
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record(PATH_CSV_HEADER)?;
    for (lambda, f) in path.lambdas.iter().zip(&path.fits) {
        w.write_record([
            lambda.to_string(),
            f.support.len().to_string(),
            f.deviance.to_string(),
            f.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_select(args: &SelectArgs) -> Result<()> {
    let r = resolve_model(&args.model)?;
    let data = load_data(&args.data)?;
    let (n, p) = (data.n(), data.p());
    for &c in &args.criteria {
        crate::path::complexity_constant(c, n, p)?;
    }
    let path = compute_path(&data, &r, args.grid_count)?;
    create_dir(&args.out_dir)?;
    let mut selections = Vec::new();
    for &c in &args.criteria {
        let report = select_model(&path, c, n, p)?;
        let fit = &path.fits[report.chosen_index];
        let raw = data.to_raw_coefficients(&fit.beta_vector());
        let mut w = csv::Writer::from_path(args.out_dir.join(format!("gic_{}.csv", c.name())))?;
        w.write_record(GIC_CSV_HEADER)?;
        for ((lambda, f), g) in path.lambdas.iter().zip(&path.fits).zip(gic_values(&path, report.a_n, n)) {
            w.write_record([
                lambda.to_string(),
                f.support.len().to_string(),
                f.deviance.to_string(),
                g.to_string(),
            ])?;
        }
        w.flush()?;
        selections.push(json!({
            "report": report,
            "intercept": fit.intercept,
            "coefficients": fit.beta,
            "raw_coefficients": raw.as_slice(),
        }));
    }
    let doc = json!({
        "family": r.family,
        "penalty": r.method,
        "phi": path.phi,
        "n": n,
        "p": p,
        "path_length": path.len(),
        "support_cap": path.support_cap,
        "selections": selections,
    });
    write_text(&args.out_dir.join("selection.json"), &serde_json::to_string_pretty(&doc)?)?;
    for s in &selections {
        let rep = &s["report"];
        println!("{}: lambda {} support {}", rep["criterion"].as_str().unwrap_or(""), rep["chosen_lambda"], rep["chosen_support"]);
    }
    Ok(())
}

/// The four summary figures: one line per (penalty, criterion) against `n`.
pub fn study_plots(report: &SimReport) -> Vec<(&'static str, LinePlot)> {
    type Metric = fn(&CellSummary) -> f64;
    let metrics: [(&'static str, &str, Metric); 4] = [
        ("percent_correct.svg", "correctly specified models", |c| c.percent_correct),
        ("false_positives.svg", "mean false positives", |c| c.mean_false_positives),
        ("relative_model_error.svg", "median relative model error", |c| c.median_relative_model_error),
        ("chosen_lambda.svg", "median chosen lambda", |c| c.median_chosen_lambda),
    ];
    let mut keys: Vec<(String, String)> = Vec::new();
    for c in &report.cells {
        let k = (c.penalty.clone(), c.criterion.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    metrics
        .iter()
        .map(|(file, label, f)| {
            let mut plot = LinePlot::new(&format!("{} model: {label}", report.model), "n", label);
            for (pen, crit) in &keys {
                let pts = report
                    .cells
                    .iter()
                    .filter(|c| &c.penalty == pen && &c.criterion == crit)
                    .map(|c| (c.n as f64, f(c)))
                    .collect();
                plot.add_series(&format!("{pen}/{crit}"), pts);
            }
            (*file, plot)
        })
        .collect()
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("GICSELECT_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("GICSELECT_THREADS must be a count, got '{v}'"))),
        _ => Ok(0),
    }
}

fn run_simulate(args: &SimulateArgs, threads: usize) -> Result<()> {
    let cfg = simulation_config(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| run_study(&cfg))?;
    create_dir(&args.out_dir)?;
    let stem = format!("simulation_{}", args.model);
    report.write_csv(File::create(args.out_dir.join(format!("{stem}.csv")))?)?;
    write_text(&args.out_dir.join(format!("{stem}.json")), &report.to_json()?)?;
    for (file, plot) in study_plots(&report) {
        write_text(&args.out_dir.join(format!("{}_{file}", args.model)), &plot.to_svg())?;
    }
    Ok(())
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<bool> {
    let report = suite::run(args.seed)?;
    for c in &report.checks {
        println!(
            "{:<28} {:>14} {}",
            c.name,
            crate::plot::sig6(c.value),
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    let mut w = output(args.out.as_deref())?;
    if args.out.is_some() {
        writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    }
    w.flush()?;
    Ok(report.passed)
}

fn run_profile(args: &ProfileArgs) -> Result<()> {
    let fmt = |p: &Path| TableFormat::from_path(p);
    let scores = load_vector(&args.scores, fmt(&args.scores), args.header)?;
    let labels = load_vector(&args.labels, fmt(&args.labels), args.header)?;
    let profile = accuracy_profile(scores.as_slice(), labels.as_slice(), args.mode)?;
    let oracle = oracle_profile(labels.as_slice(), args.mode)?;
    create_dir(&args.out_dir)?;
    profile.write_csv(File::create(args.out_dir.join("profile.csv"))?)?;
    oracle.write_csv(File::create(args.out_dir.join("oracle_profile.csv"))?)?;
    let mut plot = LinePlot::new(
        &format!("accuracy profile ({})", args.mode),
        "fraction inspected",
        profile.mode.csv_header()[1],
    );
    plot.add_series("scores", profile.points.clone());
    plot.add_series("oracle", oracle.points.clone());
    write_text(&args.out_dir.join("profile.svg"), &plot.to_svg())?;
    Ok(())
}

fn check_grid(count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::invalid("--grid-count must be at least 2"));
    }
    Ok(())
}

fn simulation_config(args: &SimulateArgs) -> Result<StudyConfig> {
    let penalties = args
        .penalties
        .iter()
        .map(|p| Method::parse(p, args.scad_a, args.mcp_gamma))
        .collect::<Result<Vec<_>>>()?;
    check_grid(args.grid_count)?;
    let mut cfg = StudyConfig::new(args.model, args.n.clone(), args.reps, args.seed);
    cfg.penalties = penalties;
    cfg.rules = args.criteria.iter().map(|&c| SelectionRule::Gic(c)).collect();
    cfg.phi = args.phi;
    cfg.path.grid_count = args.grid_count;
    cfg.validate()?;
    Ok(cfg)
}

/// Checks every option before any file is read or any model is fitted.
fn validate(command: &Command) -> Result<()> {
    match command {
        Command::Fit(a) => {
            let r = resolve_model(&a.model)?;
            if r.phi == Some(PhiMode::PlugIn) {
                return Err(Error::invalid("--phi plugin needs a path; use `select` or pass --phi known:<value>"));
            }
            if !(a.lambda.is_finite() && a.lambda >= 0.0) {
                return Err(Error::invalid(format!("lambda must be nonnegative, got {}", a.lambda)));
            }
            if matches!(r.method, Method::AdaptiveLasso { .. }) && a.lambda == 0.0 {
                return Err(Error::invalid("adaptive_lasso needs lambda > 0"));
            }
        }
        Command::Path(a) => {
            resolve_model(&a.model)?;
            check_grid(a.grid_count)?;
        }
        Command::Select(a) => {
            resolve_model(&a.model)?;
            check_grid(a.grid_count)?;
            if a.criteria.is_empty() {
                return Err(Error::invalid("--criteria needs at least one entry"));
            }
        }
        Command::Simulate(a) => {
            simulation_config(a)?;
        }
        Command::Diagnose(_) | Command::Profile(_) => {}
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = validate(&cli.command) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a).map(|_| true),
        Command::Path(a) => run_path(a).map(|_| true),
        Command::Select(a) => run_select(a).map(|_| true),
        Command::Simulate(a) => run_simulate(a, threads).map(|_| true),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Profile(a) => run_profile(a).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("error: diagnostics reported failing checks");
            EXIT_COMPUTE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_COMPUTE
        }
    }
}
