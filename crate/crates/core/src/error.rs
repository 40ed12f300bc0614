use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Domain(String),

    /// Index outside a tabulated moment sequence.
    #[error("moment index {index} outside table of length {len}")]
    OutOfTable { index: u64, len: usize },

    /// A series or scan failed to converge below the hard cap.
    #[error("divergent series: {0}")]
    Divergent(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Quadrature order below the exactness requirement of a check.
    #[error("insufficient quadrature order: need at least {required}, got {given}")]
    InsufficientOrder { required: usize, given: usize },

    /// Requested work exceeds the configured resource budget.
    #[error("resource budget exceeded: need {required}, budget {budget}")]
    Budget { required: u64, budget: u64 },

    #[error("weight density unavailable: {0}")]
    DensityUnavailable(String),

    #[error("descriptor: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
