//! Standardized design matrix plus response.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on `||x_j|| = sqrt(n)` for pre-standardized input.
const NORM_TOLERANCE: f64 = 1e-8;

/// Columns scaled to Euclidean norm `sqrt(n)`, with the factors that were
/// divided out.
#[derive(Clone, Debug)]
pub struct Standardized {
    pub x: DMatrix<f64>,
    /// `||raw_j|| / sqrt(n)`; 1 for zero columns.
    pub column_scales: Vec<f64>,
    /// Indices of all-zero columns, left untouched.
    pub zero_columns: Vec<usize>,
}

/// Rescales every nonzero column to norm `sqrt(n)`.
pub fn standardize_columns(raw: &DMatrix<f64>) -> Standardized {
    let n = raw.nrows() as f64;
    let mut x = raw.clone();
    let mut column_scales = Vec::with_capacity(raw.ncols());
    let mut zero_columns = Vec::new();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero_columns.push(j);
            column_scales.push(1.0);
            continue;
        }
        let scale = norm / n.sqrt();
        col /= scale;
        column_scales.push(scale);
    }
    Standardized {
        x,
        column_scales,
        zero_columns,
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_scales: Vec<f64>,
    zero_columns: Vec<usize>,
}

impl Dataset {
    /// Standardizes `raw_x` and pairs it with `y`.
    pub fn new(raw_x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_shape(&raw_x, &y)?;
        let s = standardize_columns(&raw_x);
        if !s.zero_columns.is_empty() {
            log::warn!("zero columns left unscaled: {:?}", s.zero_columns);
        }
        Ok(Dataset {
            x: s.x,
            y,
            column_scales: s.column_scales,
            zero_columns: s.zero_columns,
        })
    }

    /// Wraps a design that is already standardized; every column must have
    /// norm `sqrt(n)` to within `1e-8` relative.
    pub fn from_standardized(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_shape(&x, &y)?;
        let target = (x.nrows() as f64).sqrt();
        for (j, col) in x.column_iter().enumerate() {
            let norm = col.norm();
            if ((norm - target) / target).abs() > NORM_TOLERANCE {
                return Err(Error::invalid(format!(
                    "column {j} has norm {norm}, expected sqrt(n) = {target}"
                )));
            }
        }
        let p = x.ncols();
        Ok(Dataset {
            x,
            y,
            column_scales: vec![1.0; p],
            zero_columns: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn zero_columns(&self) -> &[usize] {
        &self.zero_columns
    }

    /// Same design, different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: self.n(),
                got: y.len(),
            });
        }
        Ok(Dataset { y, ..self.clone() })
    }

    pub fn linear_predictor(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.p(),
                got: beta.len(),
            });
        }
        Ok(&self.x * beta)
    }

    /// Maps standardized-scale coefficients back to the raw column scale.
    pub fn to_raw_coefficients(&self, beta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            beta.len(),
            beta.iter().zip(&self.column_scales).map(|(b, s)| b / s),
        )
    }
}

fn check_shape(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::invalid("design matrix must be nonempty"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("design and response must be finite"));
    }
    Ok(())
}
