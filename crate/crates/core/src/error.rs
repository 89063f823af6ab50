use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("need at least {required} training instances, found {found}")]
    TooFewInstances { required: usize, found: usize },

    #[error("preference set is empty")]
    EmptyPreferences,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown label '{label}' (row {row}); known classes: {known:?}")]
    UnknownLabel {
        label: String,
        row: usize,
        known: Vec<String>,
    },

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("every feature is constant; nothing left after normalization")]
    NoFeatures,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

impl Error {
    pub(crate) fn dimension(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            found,
        }
    }

    /// Short stable identifier, used as the machine-readable prefix of CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::TooFewInstances { .. } => "too-few-instances",
            Error::EmptyPreferences => "empty-preferences",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::NonNumeric { .. } => "non-numeric",
            Error::UnknownLabel { .. } => "unknown-label",
            Error::UnknownFeature(_) => "unknown-feature",
            Error::EmptyDataset => "empty-dataset",
            Error::NoFeatures => "no-features",
            Error::InvalidDataset(_) => "invalid-dataset",
        }
    }
}
