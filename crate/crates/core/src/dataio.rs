//! Numeric table input, accuracy profiles, and a synthetic expression fixture.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{standardize_columns, Dataset, Standardized};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }

    /// `.tsv` and `.tab` are tab separated, anything else comma separated.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => TableFormat::Tsv,
            _ => TableFormat::Csv,
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "tsv" => Ok(TableFormat::Tsv),
            other => Err(Error::invalid(format!("unknown table format '{other}' (expected csv or tsv)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub values: DMatrix<f64>,
    pub column_names: Option<Vec<String>>,
}

impl RawTable {
    pub fn row_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn col_count(&self) -> usize {
        self.values.ncols()
    }
}

/// Parses a rectangular numeric table. Error locations are 1-based file
/// lines and columns.
pub fn parse_matrix<R: Read>(reader: R, format: TableFormat, has_header: bool) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut width: Option<usize> = None;
    let mut cells = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Ragged {
                    row: line,
                    expected: w,
                    got: record.len(),
                })
            }
            _ => {}
        }
        if has_header && names.is_none() {
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        for (col, cell) in record.iter().enumerate() {
            let parsed = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            let value = parsed.ok_or_else(|| Error::Parse {
                row: line,
                column: col + 1,
                message: if cell.is_empty() {
                    "missing value".to_string()
                } else {
                    format!("'{cell}' is not a finite number")
                },
            })?;
            cells.push(value);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 {
        return Err(Error::invalid("table has no data rows"));
    }
    Ok(RawTable {
        values: DMatrix::from_row_slice(rows, cols, &cells),
        column_names: names,
    })
}

pub fn load_matrix(path: &Path, format: TableFormat, has_header: bool) -> Result<RawTable> {
    parse_matrix(File::open(path)?, format, has_header)
}

/// A single row or a single column, read as a vector.
pub fn load_vector(path: &Path, format: TableFormat, has_header: bool) -> Result<DVector<f64>> {
    let table = load_matrix(path, format, has_header)?;
    vector_from_table(&table)
}

fn vector_from_table(table: &RawTable) -> Result<DVector<f64>> {
    match (table.row_count(), table.col_count()) {
        (_, 1) => Ok(table.values.column(0).into_owned()),
        (1, _) => Ok(table.values.row(0).transpose()),
        (r, c) => Err(Error::invalid(format!("expected a single row or column, got {r}x{c}"))),
    }
}

/// Rescales every nonzero column to Euclidean norm `sqrt(n)`.
pub fn standardize(raw: &RawTable) -> Standardized {
    standardize_columns(&raw.values)
}

pub fn dataset_from_tables(x: &RawTable, y: DVector<f64>) -> Result<Dataset> {
    Dataset::new(x.values.clone(), y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    /// Share of all positives found among the top `k`.
    Capture,
    /// Share of positives among the top `k`.
    Precision,
}

impl ProfileMode {
    pub fn csv_header(self) -> [&'static str; 2] {
        match self {
            ProfileMode::Capture => ["fraction_inspected", "fraction_captured"],
            ProfileMode::Precision => ["fraction_inspected", "fraction_positive"],
        }
    }
}

impl fmt::Display for ProfileMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileMode::Capture => "capture",
            ProfileMode::Precision => "precision",
        })
    }
}

impl FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capture" => Ok(ProfileMode::Capture),
            "precision" => Ok(ProfileMode::Precision),
            other => Err(Error::invalid(format!("unknown profile mode '{other}' (expected capture or precision)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyProfile {
    pub mode: ProfileMode,
    /// `(k / n, value among the top k)` for `k = 1..=n`.
    pub points: Vec<(f64, f64)>,
    pub prevalence: f64,
}

impl AccuracyProfile {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.mode.csv_header())?;
        for (x, y) in &self.points {
            w.write_record([x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn labels_to_bools(labels: &[f64]) -> Result<Vec<bool>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| match l {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(Error::invalid(format!("label {} is {other}, expected 0 or 1", i + 1))),
        })
        .collect()
}

fn profile_from_order(ordered: impl Iterator<Item = bool>, n: usize, positives: usize, mode: ProfileMode) -> AccuracyProfile {
    let mut hits = 0usize;
    let points = ordered
        .enumerate()
        .map(|(i, pos)| {
            hits += pos as usize;
            let k = i + 1;
            let y = match mode {
                ProfileMode::Capture => hits as f64 / positives as f64,
                ProfileMode::Precision => hits as f64 / k as f64,
            };
            (k as f64 / n as f64, y)
        })
        .collect();
    AccuracyProfile {
        mode,
        points,
        prevalence: positives as f64 / n as f64,
    }
}

/// Orders cases by descending score (ties keep input order) and tracks how
/// the positives accumulate.
pub fn accuracy_profile(scores: &[f64], labels: &[f64], mode: ProfileMode) -> Result<AccuracyProfile> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let flags = labels_to_bools(labels)?;
    let positives = flags.iter().filter(|f| **f).count();
    if positives == 0 {
        return Err(Error::invalid("labels contain no positive case"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(profile_from_order(
        order.into_iter().map(|i| flags[i]),
        flags.len(),
        positives,
        mode,
    ))
}

/// Profile of a ranking that puts every positive first.
pub fn oracle_profile(labels: &[f64], mode: ProfileMode) -> Result<AccuracyProfile> {
    let flags = labels_to_bools(labels)?;
    let positives = flags.iter().filter(|f| **f).count();
    if positives == 0 {
        return Err(Error::invalid("labels contain no positive case"));
    }
    let n = flags.len();
    Ok(profile_from_order((0..n).map(|i| i < positives), n, positives, mode))
}

/// Expression-like two-class data: `informative` genes shift by `effect`
/// between classes, the rest are noise.
#[derive(Clone, Debug)]
pub struct ExpressionSet {
    pub x: DMatrix<f64>,
    pub labels: DVector<f64>,
}

pub const FIXTURE_TRAIN: usize = 38;
pub const FIXTURE_TEST: usize = 34;
pub const FIXTURE_GENES: usize = 3051;

pub fn synthetic_expression(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    positives: usize,
    informative: usize,
    effect: f64,
) -> Result<ExpressionSet> {
    if positives == 0 || positives > n || informative > p {
        return Err(Error::invalid("need 0 < positives <= n and informative <= p"));
    }
    let labels = DVector::from_fn(n, |i, _| if i < positives { 1.0 } else { 0.0 });
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            let shift = if j < informative && labels[i] == 1.0 { effect } else { 0.0 };
            x[(i, j)] = shift + rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(ExpressionSet { x, labels })
}

/// Training and test sets shaped like the classic leukemia split
/// (38 and 34 samples, 3051 genes, about a third positive).
pub fn leukemia_like_fixture(seed: u64) -> Result<(ExpressionSet, ExpressionSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = synthetic_expression(&mut rng, FIXTURE_TRAIN, FIXTURE_GENES, 11, 10, 1.5)?;
    let test = synthetic_expression(&mut rng, FIXTURE_TEST, FIXTURE_GENES, 14, 10, 1.5)?;
    Ok((train, test))
}

pub fn write_matrix<W: Write>(writer: W, x: &DMatrix<f64>, names: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(names) = names {
        w.write_record(names)?;
    }
    for i in 0..x.nrows() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
