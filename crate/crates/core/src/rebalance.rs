//! Trade-preservation test, balanced arbitrage, inter-pool transfer pricing
//! and the GMM-with-rebalancing quote.
//!
//! Rebalancing moves X out of the quoted pool `l` into the pool with the
//! highest reserve ratio, paid in Y at (at most) the global ratio `r`, until
//! `l`'s ratio reaches `r`. Aggregate reserves never change during the loop,
//! so `r` is fixed for the whole procedure. Each transfer brings either `l`
//! or the receiving pool exactly to `r`, which bounds the loop by the number
//! of pools.

use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::pool::{Ecosystem, PoolId, Side};
use crate::pricing::{apply_swap, cpmm_out, gmm_out, settle, Algorithm, Quote, SwapOrder};

/// One inter-pool transfer: `amount_x` of X from `from_pool` to `to_pool`,
/// paid with `amount_y_received` of Y.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceTransfer<T> {
    pub from_pool: PoolId,
    pub to_pool: PoolId,
    pub amount_x: T,
    pub amount_y_received: T,
}

/// Per-pool slack of the two strict inequalities. Both must be positive for
/// every pool for the condition to hold.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSlack<T> {
    pub pool: PoolId,
    /// Aggregate rate minus the pool's local rate.
    pub left: T,
    /// Best balanced-arbitrage rate minus the pool's local rate.
    pub right: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport<T> {
    pub holds: bool,
    pub slacks: Vec<PoolSlack<T>>,
}

/// Local CPMM terms of trade `r_i / (1 + dx/x_i)`.
fn local_rate<T: Scalar>(dx: &T, x: &T, y: &T) -> T {
    (y.clone() / x.clone()) / (T::one() + dx.clone() / x.clone())
}

/// Terms of trade of the largest pool after balanced arbitrage,
/// `r / (1 + dx / sqrt(max_j x_j y_j / r))`.
pub fn balanced_arbitrage_rate<T: Scalar>(dx: &T, eco: &Ecosystem<T>) -> T {
    let r = eco.global_ratio();
    let best = eco.pool(eco.max_product_pool()).map(|p| p.product()).unwrap_or_else(|_| T::zero());
    let depth = (best / r.clone()).sqrt();
    r / (T::one() + dx.clone() / depth)
}

/// Checks whether, for a send-X order of `dx`, an all-CPMM ecosystem after
/// balanced arbitrage gives strictly better terms than GMM.
pub fn trade_preservation_condition<T: Scalar>(dx: &T, eco: &Ecosystem<T>) -> PreservationReport<T> {
    let x = eco.total_x();
    let r = eco.global_ratio();
    let global = r / (T::one() + dx.clone() / x);
    let arbitraged = balanced_arbitrage_rate(dx, eco);
    let slacks: Vec<_> = eco
        .pools()
        .iter()
        .map(|p| {
            let local = local_rate(dx, &p.x, &p.y);
            PoolSlack {
                pool: p.id,
                left: global.clone() - local.clone(),
                right: arbitraged.clone() - local,
            }
        })
        .collect();
    let holds = eco.len() >= 2 && slacks.iter().all(|s| s.left.is_positive() && s.right.is_positive());
    PreservationReport { holds, slacks }
}

/// Resolves every price gap with ratio-preserving arbitrage: each pool keeps
/// its product and moves to the global ratio.
pub fn balanced_arbitrage<T: Scalar>(eco: &Ecosystem<T>) -> Result<Ecosystem<T>> {
    let r = eco.global_ratio();
    let mut next = eco.clone();
    for p in eco.pools() {
        let k = p.product();
        let x = (k.clone() / r.clone()).sqrt();
        let y = (r.clone() * k).sqrt();
        next = next.with_pool(p.id, x, y)?;
    }
    Ok(next)
}

/// Y paid by `to_pool` for `dx` of X sent by another pool:
/// `min(cpmm_out(dx, x_j, y_j), r * dx)`.
pub fn inter_pool_quote<T: Scalar>(dx: &T, to_pool: PoolId, eco: &Ecosystem<T>) -> Result<T> {
    let pool = eco.pool(to_pool)?;
    let local = cpmm_out(dx, &pool.x, &pool.y)?;
    let at_ratio = eco.global_ratio() * dx.clone();
    Ok(T::min_of(local, at_ratio))
}

/// Result of a GMM-with-rebalancing quote.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalQuote<T> {
    /// Ecosystem after the rebalancing transfers and before the trade.
    pub rebalanced: Ecosystem<T>,
    pub quote: Quote<T>,
    pub transfers: Vec<RebalanceTransfer<T>>,
    /// Whether the rebalancing loop ran.
    pub triggered: bool,
}

/// GMM-with-rebalancing quote for a send-X order of `dx` into `pool_id`.
///
/// Without `force_trigger`, rebalancing runs only when the target is the
/// (lowest-index) largest-product pool, the trade-preservation condition
/// holds, and the target's ratio is below the global ratio. Otherwise the
/// plain GMM quote on the unmodified ecosystem is returned.
pub fn gmm_rebal_quote<T: Scalar>(
    dx: &T,
    eco: &Ecosystem<T>,
    pool_id: PoolId,
    force_trigger: bool,
) -> Result<RebalQuote<T>> {
    if !dx.is_positive() {
        return Err(AmmError::domain("rebalancing quote needs a positive order"));
    }
    let target = eco.pool(pool_id)?;
    let r = eco.global_ratio();
    let triggered = force_trigger
        || (eco.max_product_pool() == pool_id
            && trade_preservation_condition(dx, eco).holds
            && target.ratio() < r);
    if !triggered {
        return Ok(RebalQuote {
            rebalanced: eco.clone(),
            quote: gmm_out(dx, eco, pool_id)?,
            transfers: Vec::new(),
            triggered: false,
        });
    }
    let (rebalanced, transfers) = rebalance_towards_global(eco, pool_id)?;
    let quote = gmm_out(dx, &rebalanced, pool_id)?;
    Ok(RebalQuote {
        rebalanced,
        quote,
        transfers,
        triggered: true,
    })
}

/// Same as [`gmm_rebal_quote`] for orders in either direction. Send-Y orders
/// run the mirrored procedure (Y moves out of the target) and the returned
/// ecosystem and transfers are expressed in the original labels, so a
/// transfer's `amount_x` is then an amount of Y.
pub fn gmm_rebal_quote_sided<T: Scalar>(
    side: Side,
    amount: &T,
    eco: &Ecosystem<T>,
    pool_id: PoolId,
    force_trigger: bool,
) -> Result<RebalQuote<T>> {
    match side {
        Side::SendX => gmm_rebal_quote(amount, eco, pool_id, force_trigger),
        Side::SendY => {
            let mut q = gmm_rebal_quote(amount, &eco.relabeled(), pool_id, force_trigger)?;
            q.rebalanced = q.rebalanced.relabeled();
            Ok(q)
        }
    }
}

/// Executes an order under any algorithm, including GMM with rebalancing
/// (never forced). Rebalancing transfers are kept in the returned state.
pub fn execute_swap<T: Scalar>(eco: &Ecosystem<T>, order: &SwapOrder<T>, alg: Algorithm) -> Result<(Ecosystem<T>, T)> {
    if alg != Algorithm::GmmRebal {
        return apply_swap(eco, order, alg);
    }
    if order.amount_in.is_negative() {
        return Err(AmmError::NegativeAmount(order.amount_in.to_f64()));
    }
    if order.amount_in.is_zero() {
        eco.pool(order.pool_id)?;
        return Ok((eco.clone(), T::zero()));
    }
    let rq = gmm_rebal_quote_sided(order.side, &order.amount_in, eco, order.pool_id, false)?;
    let next = settle(&rq.rebalanced, order, &rq.quote.amount_out)?;
    Ok((next, rq.quote.amount_out))
}

/// Runs the transfer loop until pool `l` sits at the global ratio.
fn rebalance_towards_global<T: Scalar>(
    eco: &Ecosystem<T>,
    l: PoolId,
) -> Result<(Ecosystem<T>, Vec<RebalanceTransfer<T>>)> {
    let r = eco.global_ratio();
    let two_r = r.clone() + r.clone();
    let mut state = eco.clone();
    let mut transfers = Vec::new();
    // Each pass pins l or the receiver at r; n + 1 passes bound the float path.
    for _ in 0..=eco.len() {
        let pl = state.pool(l)?.clone();
        let ratio_l = pl.ratio();
        if ratio_l >= r || ratio_l.close_to(&r, &r) {
            return Ok((state, transfers));
        }
        let Some(j) = highest_ratio_other(&state, l) else {
            break;
        };
        let pj = state.pool(j)?.clone();
        let need_l = (r.clone() * pl.x.clone() - pl.y.clone()) / two_r.clone();
        let room_j = (pj.y.clone() - r.clone() * pj.x.clone()) / two_r.clone();
        let amount_x = T::min_of(need_l, room_j);
        if !amount_x.is_positive() {
            break;
        }
        let amount_y = inter_pool_quote(&amount_x, j, &state)?;
        state = state
            .with_pool(l, pl.x.clone() - amount_x.clone(), pl.y.clone() + amount_y.clone())?
            .with_pool(j, pj.x.clone() + amount_x.clone(), pj.y.clone() - amount_y.clone())?;
        transfers.push(RebalanceTransfer {
            from_pool: l,
            to_pool: j,
            amount_x,
            amount_y_received: amount_y,
        });
    }
    let pl = state.pool(l)?;
    if pl.ratio() < r && !pl.ratio().close_to(&r, &r) {
        return Err(AmmError::Invariant(format!(
            "rebalancing of pool {l} stopped below the global ratio"
        )));
    }
    Ok((state, transfers))
}

/// Lowest-index pool other than `l` with the highest reserve ratio.
fn highest_ratio_other<T: Scalar>(eco: &Ecosystem<T>, l: PoolId) -> Option<PoolId> {
    let mut best: Option<(PoolId, T)> = None;
    for p in eco.pools().iter().filter(|p| p.id != l) {
        let ratio = p.ratio();
        match &best {
            Some((_, b)) if ratio <= *b => {}
            _ => best = Some((p.id, ratio)),
        }
    }
    best.map(|(id, _)| id)
}
