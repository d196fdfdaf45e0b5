use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("{what} needs at least {needed} values, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("generation incomplete: {accumulated} of {genes} steps accumulated")]
    IncompleteGeneration { accumulated: usize, genes: usize },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::NonFinite(what));
        }
        if value < lo || value > hi {
            return Err(Error::OutOfRange { what, value, lo, hi });
        }
        Ok(value)
    }
}
