use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NswError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("enumeration budget exceeded: {required} allocations > budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    /// An internal consistency check failed. `id` names the check.
    #[error("invariant `{id}` violated: {detail}")]
    Invariant { id: &'static str, detail: String },
}

impl NswError {
    pub(crate) fn invariant(id: &'static str, detail: impl Into<String>) -> Self {
        NswError::Invariant {
            id,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, NswError>;
