use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] gradxplain_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: data row {row}, column `{column}`: {reason}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(e) => match e {
                gradxplain_core::Error::DimensionMismatch { .. } => "dimension-mismatch",
                gradxplain_core::Error::InvalidParameter { .. } => "invalid-parameter",
                gradxplain_core::Error::NotPositiveDefinite { .. } => "not-positive-definite",
                gradxplain_core::Error::NegativeVariance(_) => "negative-variance",
                gradxplain_core::Error::Empty(_) => "empty-input",
                gradxplain_core::Error::InvalidLabels(_) => "invalid-labels",
                gradxplain_core::Error::NoInformativeDirection => "no-informative-direction",
                gradxplain_core::Error::UnknownQuery => "unknown-query",
                gradxplain_core::Error::BinningMismatch => "binning-mismatch",
                gradxplain_core::Error::InfeasibleSplit(_) => "infeasible-split",
                gradxplain_core::Error::Parse { .. } => "parse",
            },
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json { .. } => "json",
            Error::MissingColumn { .. } => "missing-column",
            Error::Cell { .. } => "parse",
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
        }
    }

    /// The error document printed on stderr by the command-line tool.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Doc {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .expect("plain strings serialize")
    }
}
