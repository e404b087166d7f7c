use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution pair: {0}")]
    InvalidPair(String),

    #[error("value {0} is outside the support of the measurement model")]
    OutOfSupport(f64),

    #[error("degenerate pair: KL divergences {d01:e} / {d10:e} are numerically zero")]
    DegeneratePair { d01: f64, d10: f64 },

    #[error("argument {value} outside the valid range {what}")]
    Range { what: &'static str, value: f64 },

    #[error("attack target infeasible: {0}")]
    TargetInfeasible(String),

    #[error("operation requires a binary-valued pair")]
    UnsupportedPair,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data for exponent fit: {usable} usable points, need {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn range(what: &'static str, value: f64) -> Self {
        Error::Range { what, value }
    }
}
