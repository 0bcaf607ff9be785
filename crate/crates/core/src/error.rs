use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid database: {0}")]
    InvalidDatabase(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("query class must contain at least one query")]
    EmptyClass,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate basis index {0}")]
    DuplicateIndex(usize),

    /// The sparse domain is too large to enumerate. Carries the size when it
    /// fits in a `u128`.
    #[error(
        "sparse domain for n={n}, m={m} has {} elements, over the budget of {budget}; use the MCMC sampler instead",
        size.map_or_else(|| "more than 2^128".to_string(), |s| s.to_string())
    )]
    DomainTooLarge {
        n: usize,
        m: u64,
        size: Option<u128>,
        budget: u128,
    },

    #[error("{what} budget of {budget} exceeded")]
    BudgetExceeded { what: &'static str, budget: u128 },

    #[error("no shattered family: {0}")]
    NoShatteredFamily(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for refusals caused by enumeration or search budgets.
    pub fn is_budget_refusal(&self) -> bool {
        matches!(
            self,
            Error::DomainTooLarge { .. } | Error::BudgetExceeded { .. }
        )
    }
}
