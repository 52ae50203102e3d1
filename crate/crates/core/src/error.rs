use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semi-definite: {0}")]
    NotPositiveDefinite(String),

    #[error(
        "null distribution needs {terms} mixture terms, above the cap of {cap}; \
         evaluate the null by Monte Carlo instead (see mc_null_oracle)"
    )]
    EnumerationTooLarge { terms: u128, cap: u64 },

    #[error("no study with an observed p-value")]
    NoObservedStudies,

    #[error("complete-case combination needs every p-value observed ({censored} censored)")]
    CensoredStudies { censored: usize },

    #[error("row {row} ({feature}): {message}")]
    Row {
        row: usize,
        feature: String,
        message: String,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    Data {
        path: String,
        line: usize,
        column: String,
        message: String,
    },

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("store: {0}")]
    Store(String),

    #[error("store checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
