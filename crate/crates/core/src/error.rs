//! Error type shared by every module, with the CLI exit-code mapping.

use std::io;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input was not valid JSON. The offset is a byte position into the input.
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    /// A record in a structured file is missing a field or has one of wrong shape.
    #[error("schema error in record {record}: field `{field}`: {message}")]
    Schema {
        record: usize,
        field: String,
        message: String,
    },

    /// A labeled dataset row violates the label contract. Rows are 1-based data rows.
    #[error("labeled-data error on row {row}: {message}")]
    LabeledData { row: usize, message: String },

    /// File-format problem that is not tied to a single row (bad header, bad TSV line).
    #[error("format error: {0}")]
    Format(String),

    /// Dataset-level violation: empty, too small, duplicate ids.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Shape mismatch in linear algebra or model input.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Non-finite values where finite math was required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Bad configuration file or invalid parameter combination.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Exit code contract: 0 success, 2 usage error, 3 data error, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numerical(_) => 4,
            _ => 3,
        }
    }
}
