use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("design matrix restricted to {support:?} is rank deficient")]
    RankDeficient { support: Vec<usize> },

    #[error("maximum likelihood estimate does not exist on support {support:?} (separation, |beta| > {bound})")]
    Separation { support: Vec<usize>, bound: f64 },

    #[error("solver diverged after {iterations} outer iterations: {reason} (objective trace: {trace:?})")]
    Divergence {
        iterations: usize,
        reason: String,
        trace: Vec<f64>,
    },

    #[error("Newton iteration did not converge on support {support:?} (score norm {score_norm:e})")]
    NewtonFailure { support: Vec<usize>, score_norm: f64 },

    #[error("fit failed at lambda = {lambda:e}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("enumeration of {models} candidate models exceeds the limit of {limit}; use the sampling estimator")]
    EnumerationLimit { models: u128, limit: u128 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("ragged input: row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_lambda(self, lambda: f64) -> Self {
        match self {
            e @ Error::AtLambda { .. } => e,
            e => Error::AtLambda {
                lambda,
                source: Box::new(e),
            },
        }
    }
}
