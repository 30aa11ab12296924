use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point does not belong to the system's space: {0}")]
    SystemMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget overflow: {requested} configurations requested, limit is {limit}")]
    BudgetOverflow { requested: u128, limit: u64 },

    #[error("schedule is not nested: {0}")]
    ScheduleNotNested(String),

    #[error("empty sample")]
    EmptySample,

    #[error("unsupported fiber structure: {0}")]
    UnsupportedFiber(String),
}

pub type Result<T> = std::result::Result<T, Error>;
