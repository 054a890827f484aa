use std::io;

use thiserror::Error;

/// Errors raised across parsing, splitting, imputation and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be parsed. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Record { line: usize, msg: String },

    #[error("duplicate language code `{0}`")]
    DuplicateLanguage(String),

    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    /// An imputer has nothing to say about this query; callers back off.
    #[error("no evidence for `{feature}` in language `{language}`: {reason}")]
    NoEvidence {
        language: String,
        feature: String,
        reason: &'static str,
    },

    #[error("held-out genus `{0}` does not occur in the dataset")]
    MissingGenus(String),

    #[error("language `{code}` has {observed} observed features; blanking needs at least 2")]
    TooFewFeatures { code: String, observed: usize },

    #[error("fill references cell ({language}, {feature}) which is not blanked or unknown")]
    BadFill { language: String, feature: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn record(line: usize, msg: impl Into<String>) -> Self {
        Error::Record {
            line,
            msg: msg.into(),
        }
    }

    /// Configuration and usage problems, as opposed to bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
