use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad table, unknown label, non-commuting pair, ...
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Dense output would exceed the amplitude budget.
    #[error("dense budget exceeded: {needed} amplitudes requested, limit {limit}; use contraction-only queries")]
    Budget { needed: u128, limit: u128 },
    /// Two tensors expected to be proportional are not.
    #[error("not proportional: {0}")]
    NotProportional(String),
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
