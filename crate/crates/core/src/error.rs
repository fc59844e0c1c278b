//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: non-positive standard error")]
    NonPositiveStandardError { row: usize, column: String },

    #[error("row {row}, column `{column}`: non-finite value")]
    NonFinite { row: usize, column: String },

    #[error("duplicate variant id `{0}`")]
    DuplicateId(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("variant `{0}` not found")]
    UnknownVariant(String),

    #[error("undefined ratio (null instrument){}", id_suffix(.0))]
    NullInstrument(Option<String>),

    #[error("correlation parameter must satisfy |theta| <= 1, got {0}")]
    InvalidTheta(f64),

    #[error("variance not positive for given theta{}", id_suffix(.0))]
    NonPositiveVariance(Option<String>),

    #[error("at least {needed} estimates required, got {got}")]
    InsufficientEstimates { needed: usize, got: usize },

    #[error("degenerate regressor (zero variance)")]
    DegenerateRegressor,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-positive weight at index {0}")]
    NonPositiveWeight(usize),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("need more observations than regressors: n = {n}, p = {p}")]
    TooFewObservations { n: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn id_suffix(id: &Option<String>) -> String {
    match id {
        Some(id) => format!(" for variant `{id}`"),
        None => String::new(),
    }
}
