//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        /// 1-based data row (the header is row 0).
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("non-binary label '{value}' at row {row}")]
    NonBinaryLabel { row: usize, value: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset has no labels")]
    MissingLabels,

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("unsupported model feature at {path}: {message}")]
    UnsupportedFeature { path: String, message: String },

    #[error("labels contain a single class")]
    SingleClassDataset,

    #[error("background dataset is empty")]
    EmptyBackground,

    #[error("brute-force Shapley supports at most {max} features, got {found}")]
    TooManyFeatures { max: usize, found: usize },

    #[error("no training rows in class {class}")]
    NoRowsInClass { class: u8 },

    #[error("no counterfactual candidates in the pool (query class {query_class})")]
    NoCounterfactualPool { query_class: u8 },

    #[error("point is not a counterfactual of the query")]
    NotACounterfactual,

    #[error("action subset is empty: no positive attribution with a non-zero trend")]
    EmptyActionSubset,

    #[error("plausibility pool has {found} points, need at least {needed}")]
    PoolTooSmall { needed: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no rejected samples to evaluate")]
    NoRejectedSamples,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::MissingColumn(_) => "MissingColumn",
            Error::NonBinaryLabel { .. } => "NonBinaryLabel",
            Error::EmptyDataset => "EmptyDataset",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::MissingLabels => "MissingLabels",
            Error::Schema { .. } => "SchemaError",
            Error::UnsupportedFeature { .. } => "UnsupportedFeature",
            Error::SingleClassDataset => "SingleClassDataset",
            Error::EmptyBackground => "EmptyBackground",
            Error::TooManyFeatures { .. } => "TooManyFeatures",
            Error::NoRowsInClass { .. } => "NoRowsInClass",
            Error::NoCounterfactualPool { .. } => "NoCounterfactualPool",
            Error::NotACounterfactual => "NotACounterfactual",
            Error::EmptyActionSubset => "EmptyActionSubset",
            Error::PoolTooSmall { .. } => "PoolTooSmall",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NoRejectedSamples => "NoRejectedSamples",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Io { .. } => "IoError",
        }
    }

    /// Location hint (row/column, JSON path or file), when the error has one.
    pub fn location(&self) -> Option<String> {
        match self {
            Error::Parse { row, column, .. } => Some(format!("row {row}, column {column}")),
            Error::NonBinaryLabel { row, .. } => Some(format!("row {row}")),
            Error::MissingColumn(c) => Some(format!("column {c}")),
            Error::Schema { path, .. } | Error::UnsupportedFeature { path, .. } => {
                Some(path.clone())
            }
            Error::Io { path, .. } => Some(path.clone()),
            _ => None,
        }
    }

    /// Errors caused by malformed inputs (files, flags) rather than by the
    /// data failing a domain precondition.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::MissingColumn(_)
                | Error::NonBinaryLabel { .. }
                | Error::Schema { .. }
                | Error::UnsupportedFeature { .. }
                | Error::InvalidSpec(_)
                | Error::Io { .. }
                | Error::DimensionMismatch { .. }
                | Error::MissingLabels
                | Error::EmptyDataset
        )
    }
}
