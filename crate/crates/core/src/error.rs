use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The result is not representable (overflow/underflow) or a hard cap was hit.
    #[error("range error: {0}")]
    Range(String),

    /// `4 ε² α ≥ 1`: the quartic symbol has no real partial-fraction split.
    #[error("4*epsilon^2*alpha = {value} must be < 1 (decomposition has complex roots)")]
    DecompositionDomain { value: f64 },

    /// The free kernel is singular on the diagonal for d = 2, 3.
    #[error("free kernel is singular at r = 0 in dimension {dim} ({kind} singularity)")]
    Singularity { dim: usize, kind: &'static str },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// An iterative method failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A structural assumption of the solver was violated by sampled data.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error stems from bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DecompositionDomain { .. }
                | Error::Singularity { .. }
                | Error::InvalidMeasure(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}
