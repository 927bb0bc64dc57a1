use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The tail of a delta sequence is divergent (or not known to converge)
    /// and no term cap was supplied.
    #[error("refusing to truncate a {what} whose tail from j = {start} is not known to converge; supply a term cap")]
    DivergentTail { what: &'static str, start: usize },

    #[error("truncation did not reach relative tolerance {tol:e} within {terms} terms")]
    ToleranceNotReached { tol: f64, terms: usize },

    #[error("log-improved norm is infinite: no M below {bound:e} satisfies the defining inequality")]
    NormInfinite { bound: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("homogeneous multiplier |k|^{exponent} is singular on a field with nonzero mean")]
    SingularMean { exponent: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("insufficient history: need at least {needed} states, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("numerical blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("field container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
