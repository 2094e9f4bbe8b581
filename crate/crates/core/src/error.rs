use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Argument,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("degenerate column '{0}': zero variance, cannot standardize")]
    DegenerateColumn(String),

    #[error("too few rows: need at least {required}, got {n}")]
    TooFewRows { n: usize, required: usize },

    #[error("rank deficient design: {0}")]
    Rank(String),

    #[error("saturated model unavailable: {0}")]
    SaturatedModel(String),

    #[error("fold {fold} has {size} rows; every fold needs at least 2")]
    FoldSize { fold: usize, size: usize },

    #[error("coordinate descent diverged at lambda = {lambda}")]
    Divergence { lambda: f64 },

    #[error("no stable model: maximum average kappa is {s_max}, the ratio rule needs a positive maximum")]
    NoStableModel { s_max: f64 },

    #[error("log of non-positive value: SSE = {0}")]
    LogDomain(f64),

    #[error("division by zero: degrees of freedom equal the sample size ({0})")]
    DivisionByZero(usize),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.root() {
            Error::Argument(_) => ErrorClass::Argument,
            Error::Io { .. }
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::InvalidData(_)
            | Error::DegenerateColumn(_)
            | Error::TooFewRows { .. }
            | Error::Rank(_)
            | Error::SaturatedModel(_)
            | Error::FoldSize { .. } => ErrorClass::Data,
            Error::Divergence { .. }
            | Error::NoStableModel { .. }
            | Error::LogDomain(_)
            | Error::DivisionByZero(_) => ErrorClass::Numerical,
            Error::Context { .. } => unreachable!("root() strips context"),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
