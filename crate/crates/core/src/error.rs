use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("predictive variance {0:e} is negative beyond round-off; factorization is unhealthy")]
    NegativeVariance(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("no informative direction: the Hessian is numerically zero")]
    NoInformativeDirection,

    #[error("query point is not part of the oracle's table")]
    UnknownQuery,

    #[error("histograms use different binnings")]
    BinningMismatch,

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("row {row}, column `{column}`: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
