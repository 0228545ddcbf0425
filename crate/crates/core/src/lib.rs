//! Simulation engine for fragmented constant-product AMM ecosystems.
//!
//! The crate prices swaps under four algorithms (local constant product,
//! naive global, global, and global with inter-pool rebalancing), simulates
//! adversaries against them (sandwich attacks, arbitrage, exploit sequences,
//! an informed insider), measures impermanent loss, and replays logged
//! sandwich attacks under counterfactual pool configurations.
//!
//! Everything is generic over [`num::Scalar`]; use [`num::Exact`] when
//! results must be exact and `f64` when speed matters more.

pub mod adversary;
pub mod analytics;
pub mod error;
pub mod num;
pub mod optimize;
pub mod pool;
pub mod pricing;
pub mod rebalance;
pub mod replay;
pub mod sweep;
pub mod toy;

pub use error::{AmmError, Result};
pub use num::{Exact, Scalar};
pub use pool::{Ecosystem, PoolId, PoolState, Side};
pub use pricing::{
    apply_swap, classify_swap, cpmm_out, gmm_out, ngmm_out, pool_value, quote, Algorithm, Branch, Classification,
    Quote, SenderTag, SwapOrder,
};
