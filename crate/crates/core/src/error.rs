use std::io;

use thiserror::Error;

/// Errors raised while loading instances, sampling, or running estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("item `{id}` has negative weight {weight}")]
    NegativeWeight { id: String, weight: f64 },

    #[error("item `{id}` has non-finite weight")]
    NonFiniteWeight { id: String },

    #[error("duplicate item id `{0}`")]
    DuplicateId(String),

    #[error("instance has no items")]
    EmptyInstance,

    #[error("total weight is zero")]
    ZeroTotalWeight,

    #[error("bucket index is undefined for weight {0}")]
    NonPositiveWeight(f64),

    #[error("draw budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),

    #[error("edge endpoint {endpoint} out of range for {n} vertices")]
    EndpointOutOfRange { endpoint: usize, n: usize },

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
