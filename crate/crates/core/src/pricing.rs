//! Pricing primitives: constant product, naive global, and global market
//! maker quotes, swap classification and the swap state transition.
//!
//! All quote functions work in the canonical orientation where the trader
//! sends X and receives Y. Orders sending Y are handled by relabeling the
//! assets of every pool (see [`canonicalize_direction`] and [`quote`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::pool::{Ecosystem, PoolId, PoolState, Side};

/// Pricing algorithm used by every pool of an ecosystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Constant product on local reserves.
    Cpmm,
    /// Constant product on aggregate reserves. Exploitable; exists for
    /// demonstrations only.
    Ngmm,
    /// Minimum of the local and aggregate constant-product quotes.
    Gmm,
    /// GMM preceded by inter-pool rebalancing (see [`crate::rebalance`]).
    GmmRebal,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cpmm => "CPMM",
            Algorithm::Ngmm => "nGMM",
            Algorithm::Gmm => "GMM",
            Algorithm::GmmRebal => "GMM-rebal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which formula produced a quote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    LocalCpmm,
    GlobalNgmm,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::LocalCpmm => "local-CPMM",
            Branch::GlobalNgmm => "global-nGMM",
        })
    }
}

/// Direction of a swap relative to the rest of the ecosystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// Moves the pool's ratio away from the others' (`r_i <= r_{-i}`).
    Divergent,
    /// Non-divergent and the aggregate quote is no larger than the local one.
    Convergent,
    /// Non-divergent but so large that the aggregate quote exceeds the local.
    Overshooting,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Divergent => "divergent",
            Classification::Convergent => "convergent",
            Classification::Overshooting => "overshooting",
        })
    }
}

/// Who submitted an order. Carried for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SenderTag {
    Trader,
    Arbitrageur,
    Attacker,
    Insider,
    InterPool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapOrder<T> {
    pub pool_id: PoolId,
    pub side: Side,
    pub amount_in: T,
    pub sender: SenderTag,
}

impl<T: Scalar> SwapOrder<T> {
    pub fn new(pool_id: PoolId, side: Side, amount_in: T, sender: SenderTag) -> Self {
        SwapOrder {
            pool_id,
            side,
            amount_in,
            sender,
        }
    }

    pub fn trader(pool_id: PoolId, side: Side, amount_in: T) -> Self {
        Self::new(pool_id, side, amount_in, SenderTag::Trader)
    }
}

/// Output of a quote.
///
/// For GMM quotes `branch == GlobalNgmm` exactly when the swap is
/// convergent. CPMM and nGMM quotes carry the classification for reference
/// and the branch of the formula they always use.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote<T> {
    pub amount_out: T,
    pub branch: Branch,
    pub classification: Classification,
}

fn check_amount<T: Scalar>(dx: &T) -> Result<()> {
    if dx.is_negative() {
        return Err(AmmError::NegativeAmount(dx.to_f64()));
    }
    Ok(())
}

/// Constant-product output `y_i * dx / (x_i + dx)`.
pub fn cpmm_out<T: Scalar>(dx: &T, x_i: &T, y_i: &T) -> Result<T> {
    if !x_i.is_positive() || !y_i.is_positive() {
        return Err(AmmError::domain("constant-product reserves must be positive"));
    }
    check_amount(dx)?;
    Ok(y_i.clone() * dx.clone() / (x_i.clone() + dx.clone()))
}

/// Naive global output: the constant-product formula on aggregate reserves,
/// capped at the quoted pool's Y reserve.
pub fn ngmm_out<T: Scalar>(dx: &T, eco: &Ecosystem<T>, pool_id: PoolId) -> Result<T> {
    check_amount(dx)?;
    let pool = eco.pool(pool_id)?;
    let uncapped = cpmm_out(dx, &eco.total_x(), &eco.total_y())?;
    Ok(T::min_of(uncapped, pool.y.clone()))
}

/// Classifies a send-X swap of `dx` into `pool_id`.
///
/// Single-pool ecosystems are divergent by convention (aggregates equal the
/// local reserves, so GMM degenerates to CPMM).
pub fn classify_swap<T: Scalar>(dx: &T, eco: &Ecosystem<T>, pool_id: PoolId) -> Result<Classification> {
    check_amount(dx)?;
    let pool = eco.pool(pool_id)?;
    if is_divergent(eco, pool_id)? {
        return Ok(Classification::Divergent);
    }
    let local = cpmm_out(dx, &pool.x, &pool.y)?;
    let global = ngmm_out(dx, eco, pool_id)?;
    Ok(past_divergence(&local, &global))
}

/// `r_i <= r_{-i}`, i.e. `y_i * x_{-i} <= y_{-i} * x_i`; always true for a
/// lone pool.
fn is_divergent<T: Scalar>(eco: &Ecosystem<T>, pool_id: PoolId) -> Result<bool> {
    if eco.len() < 2 {
        return Ok(true);
    }
    let pool = eco.pool(pool_id)?;
    let (x_rest, y_rest) = eco.complement(pool_id)?;
    Ok(pool.y.clone() * x_rest <= y_rest * pool.x.clone())
}

fn past_divergence<T: Scalar>(local: &T, global: &T) -> Classification {
    if global <= local {
        Classification::Convergent
    } else {
        Classification::Overshooting
    }
}

/// Global market maker quote: `min(cpmm_out, ngmm_out)`.
pub fn gmm_out<T: Scalar>(dx: &T, eco: &Ecosystem<T>, pool_id: PoolId) -> Result<Quote<T>> {
    let pool = eco.pool(pool_id)?;
    let local = cpmm_out(dx, &pool.x, &pool.y)?;
    let global = ngmm_out(dx, eco, pool_id)?;
    let classification = if is_divergent(eco, pool_id)? {
        Classification::Divergent
    } else {
        past_divergence(&local, &global)
    };
    let branch = match classification {
        Classification::Convergent => Branch::GlobalNgmm,
        Classification::Divergent | Classification::Overshooting => Branch::LocalCpmm,
    };
    Ok(Quote {
        amount_out: T::min_of(local, global),
        branch,
        classification,
    })
}

/// Result of rewriting an order into the send-X orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical<T> {
    pub order: SwapOrder<T>,
    pub pool: PoolState<T>,
    /// Set when the assets were swapped; outputs are then in the original
    /// X asset.
    pub relabeled: bool,
}

/// Rewrites a send-Y order as a send-X order on the relabeled pool.
/// Idempotent on send-X orders.
pub fn canonicalize_direction<T: Scalar>(order: &SwapOrder<T>, pool: &PoolState<T>) -> Canonical<T> {
    match order.side {
        Side::SendX => Canonical {
            order: order.clone(),
            pool: pool.clone(),
            relabeled: false,
        },
        Side::SendY => Canonical {
            order: SwapOrder {
                side: Side::SendX,
                ..order.clone()
            },
            pool: pool.relabeled(),
            relabeled: true,
        },
    }
}

/// Quotes an order in either direction under `alg`.
///
/// `GmmRebal` is rejected here; see [`crate::rebalance::gmm_rebal_quote`].
pub fn quote<T: Scalar>(eco: &Ecosystem<T>, order: &SwapOrder<T>, alg: Algorithm) -> Result<Quote<T>> {
    check_amount(&order.amount_in)?;
    eco.pool(order.pool_id)?;
    let relabeled;
    let canon = match order.side {
        Side::SendX => eco,
        Side::SendY => {
            relabeled = eco.relabeled();
            &relabeled
        }
    };
    quote_canonical(&order.amount_in, canon, order.pool_id, alg)
}

pub(crate) fn quote_canonical<T: Scalar>(
    dx: &T,
    eco: &Ecosystem<T>,
    pool_id: PoolId,
    alg: Algorithm,
) -> Result<Quote<T>> {
    match alg {
        Algorithm::Cpmm => {
            let pool = eco.pool(pool_id)?;
            Ok(Quote {
                amount_out: cpmm_out(dx, &pool.x, &pool.y)?,
                branch: Branch::LocalCpmm,
                classification: classify_swap(dx, eco, pool_id)?,
            })
        }
        Algorithm::Ngmm => Ok(Quote {
            amount_out: ngmm_out(dx, eco, pool_id)?,
            branch: Branch::GlobalNgmm,
            classification: classify_swap(dx, eco, pool_id)?,
        }),
        Algorithm::Gmm => gmm_out(dx, eco, pool_id),
        Algorithm::GmmRebal => Err(AmmError::UnsupportedAlgorithm("GMM-rebal")),
    }
}

/// Executes `order` and returns the post-trade ecosystem and the output
/// amount. Only the target pool changes.
pub fn apply_swap<T: Scalar>(
    eco: &Ecosystem<T>,
    order: &SwapOrder<T>,
    alg: Algorithm,
) -> Result<(Ecosystem<T>, T)> {
    let q = quote(eco, order, alg)?;
    let next = settle(eco, order, &q.amount_out)?;
    Ok((next, q.amount_out))
}

/// Moves `amount_in` into and `amount_out` out of the order's pool.
pub(crate) fn settle<T: Scalar>(eco: &Ecosystem<T>, order: &SwapOrder<T>, amount_out: &T) -> Result<Ecosystem<T>> {
    let pool = eco.pool(order.pool_id)?;
    let reserve_out = pool.reserve_out(order.side);
    if amount_out >= reserve_out {
        return Err(AmmError::Depletion {
            pool: pool.id,
            amount_out: amount_out.to_f64(),
            reserve: reserve_out.to_f64(),
        });
    }
    let (x, y) = match order.side {
        Side::SendX => (
            pool.x.clone() + order.amount_in.clone(),
            pool.y.clone() - amount_out.clone(),
        ),
        Side::SendY => (
            pool.x.clone() - amount_out.clone(),
            pool.y.clone() + order.amount_in.clone(),
        ),
    };
    eco.with_pool(order.pool_id, x, y)
}

/// Value of a pool's holdings in Y units at `price` (Y per X).
pub fn pool_value<T: Scalar>(pool: &PoolState<T>, price: &T) -> T {
    pool.y.clone() + price.clone() * pool.x.clone()
}
