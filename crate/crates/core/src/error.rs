use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state of energy {soe} left [{min}, {max}]")]
    SoeOutOfBounds { soe: f64, min: f64, max: f64 },

    #[error("wear cost density undefined at SoE {soe} (upper limit {max})")]
    DensitySingularity { soe: f64, max: f64 },

    #[error("gene {index} = {value} outside [{lo}, {hi}]")]
    GeneOutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no forecast for node {node} at slot {slot}")]
    MissingForecast { node: String, slot: usize },

    #[error("{path}: row {row}: {message}")]
    Csv {
        path: String,
        row: usize,
        message: String,
    },

    #[error("config {field}: {message}")]
    Config { field: String, message: String },

    #[error("fuzzy model listing line {line}: {message}")]
    Listing { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    CsvFormat(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
