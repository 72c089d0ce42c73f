use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value was non-finite or outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Every kernel weight underflowed at the requested anchor.
    #[error("empty neighborhood: no observation carries weight at anchor {anchor:?}")]
    EmptyNeighborhood { anchor: Vec<f64> },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    /// The sample has no spread, so no bandwidth can be derived from it.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// The (global) least squares design is rank deficient.
    #[error("singular design matrix (condition estimate {condition:e})")]
    SingularDesign { condition: f64 },

    /// The kernel-weighted local design is singular at the given anchors.
    #[error("locally singular weighted design at anchor(s) {anchors:?}")]
    LocalSingularity { anchors: Vec<Vec<f64>> },

    /// A bandwidth search failed for one regressor column.
    #[error("bandwidth selection failed for column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    /// A regressor column carries no variation.
    #[error("degenerate regressor `{name}`: {reason}")]
    DegenerateRegressor { name: String, reason: String },

    #[error("too many invalid bootstrap replications: {invalid} of {total}")]
    Bootstrap { invalid: usize, total: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("duplicate date {date} in {path}")]
    DuplicateDate { path: PathBuf, date: String },

    #[error("missing column `{column}` in {path}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("unknown asset `{0}`")]
    UnknownAsset(String),

    #[error("unknown data generating process `{0}`")]
    UnknownDgp(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!(
            "{what}[{i}] is not finite ({})",
            values[i]
        ))),
        None => Ok(()),
    }
}

pub(crate) fn ensure_same_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
