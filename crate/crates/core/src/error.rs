use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the precondition of the operation it was passed to.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected d={expected}, got d={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// The survival estimates at the bracket ends do not straddle the threshold.
    #[error("bracket [{lo}, {hi}] does not straddle threshold {threshold} (survival {p_lo} at lo, {p_hi} at hi)")]
    BracketInvalid {
        lo: f64,
        hi: f64,
        threshold: f64,
        p_lo: f64,
        p_hi: f64,
    },

    #[error("time step {dt} violates the stability bound {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("infected count overflow at a site")]
    CountOverflow,

    /// A replica ran out of its event budget before reaching the horizon.
    #[error("event budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
