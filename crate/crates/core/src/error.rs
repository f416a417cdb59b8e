use thiserror::Error;

use crate::mdp::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid MDP:\n{0}")]
    Invalid(ValidationReport),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("policy enumeration capacity exceeded: {policies} deterministic policies > cap {cap}")]
    Capacity { policies: u128, cap: u128 },

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("infeasible sequence at k = {k}: {message}")]
    Infeasible { k: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
