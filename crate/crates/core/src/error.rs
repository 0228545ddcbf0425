use thiserror::Error;

use crate::pool::PoolId;

/// Errors raised by the pricing engine and the analytics built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmmError {
    #[error("reserves must be strictly positive (pool {pool})")]
    NonPositiveReserve { pool: PoolId },

    #[error("ecosystem has no pools")]
    EmptyEcosystem,

    #[error("duplicate pool id {0}")]
    DuplicatePool(PoolId),

    #[error("unknown pool id {0}")]
    UnknownPool(PoolId),

    #[error("amount must be nonnegative, got {0}")]
    NegativeAmount(f64),

    #[error("swap would deplete pool {pool}: output {amount_out} >= reserve {reserve}")]
    Depletion {
        pool: PoolId,
        amount_out: f64,
        reserve: f64,
    },

    #[error("algorithm {0} is not supported by this operation")]
    UnsupportedAlgorithm(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant breach: {0}")]
    Invariant(String),
}

impl AmmError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        AmmError::Domain(msg.into())
    }
}

pub type Result<T, E = AmmError> = std::result::Result<T, E>;
