// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column {column} has {found} samples, expected {expected}")]
    DimensionMismatch {
        column: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite or negative sample at column {column}, row {row}")]
    NonFiniteSample { column: usize, row: usize },
    #[error("non-finite value: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("steady state did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("malformed row at column {column}: {message}")]
    MalformedRow { column: usize, message: String },
    #[error("column {found} out of order, expected {expected}")]
    OutOfOrder { expected: usize, found: usize },
    #[error("column {column} is missing layer {layer}")]
    MissingLayer { column: usize, layer: &'static str },
    #[error("column index {index} out of range (width {width})")]
    OutOfRange { index: usize, width: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("zero variance in normalization data")]
    ZeroVariance,
    #[error("patch layout: {0}")]
    PatchLayout(String),
    #[error("misaligned at column {0}")]
    Misaligned(usize),
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
