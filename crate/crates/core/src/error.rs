use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("absolute continuity violated: outcome {0} has positive mass under p but zero under q")]
    AbsoluteContinuity(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{what} needs {size} entries, cap is {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },

    #[error("state width mismatch at step {step}: profile requires {expected} bits, algorithm produced {actual}")]
    StateWidth { step: usize, expected: u32, actual: u32 },

    #[error("invalid memory profile `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("{check} violated: {detail}")]
    Violation { check: &'static str, detail: String },

    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
