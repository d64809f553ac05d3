use thiserror::Error;

/// Errors produced by dataset handling, design construction and model fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing value at (row {row}, {column})")]
    MissingValue { row: usize, column: String },
    #[error("non-numeric value {value:?} at (row {row}, {column})")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-finite value at (row {row}, {column})")]
    NonFinite { row: usize, column: String },
    #[error("duplicate sample id {id:?}")]
    DuplicateSampleId { id: String },
    #[error("{0}")]
    InvalidData(String),
    #[error("formula parse error: {0}")]
    Formula(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown term {0:?}")]
    UnknownTerm(String),
    #[error("unknown response block {0:?}")]
    UnknownResponse(String),
    #[error("factor {name:?} has {n} level(s); at least 2 required")]
    SingleLevel { name: String, n: usize },
    #[error("label {label:?} is not a level of factor {name:?}")]
    UnseenLabel { name: String, label: String },
    #[error("design matrix is rank deficient (offending term: {term})")]
    RankDeficient { term: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
