use std::path::PathBuf;

/// Errors produced by dataset loading, statistics and the selection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column `{0}` required by the schema is not present in the CSV header")]
    MissingColumn(String),
    #[error("schema is invalid: {0}")]
    InvalidSchema(String),
    #[error("row {row}, column `{column}`: cannot parse `{token}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        token: String,
    },
    #[error("row {row}: effort value {value} is not strictly positive")]
    NonPositiveEffort { row: usize, value: f64 },
    #[error("row {row}: duplicate project id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("dataset is empty{0}")]
    EmptyDataset(&'static str),
    #[error("need at least {needed} projects, got {got}")]
    TooFewProjects { needed: usize, got: usize },
    #[error("attribute `{0}` is not numeric")]
    NotNumeric(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot open `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
