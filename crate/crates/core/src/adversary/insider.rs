//! The informed insider of the ideal benchmark.
//!
//! Both pools start at a common ratio `r_init`; the insider knows the price
//! is about to move to `r_new`. It first trades with the large pool until
//! that pool sits at `r_new` (a divergent, locally priced trade), then sends
//! the profit-maximising order to the small pool, which is priced on the
//! aggregate reserves. Afterwards both pools sit at `r_new`.

use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::optimize::golden_section_max;
use crate::pool::{Ecosystem, PoolId, PoolState, Side};
use crate::pricing::{apply_swap, Algorithm, SenderTag, SwapOrder};

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InsiderPlan<T> {
    pub orders: Vec<SwapOrder<T>>,
    /// Initial ecosystem followed by the state after each order.
    pub trajectory: Vec<Ecosystem<T>>,
    pub large_pool: PoolId,
    pub small_pool: Option<PoolId>,
    /// Insider's net position valued in Y at `r_new`.
    pub profit: T,
    /// Final reserves of the small pool predicted by the closed form, for
    /// cross-checking the optimiser.
    pub closed_form_small: Option<PoolState<f64>>,
}

impl<T: Scalar> InsiderPlan<T> {
    pub fn final_state(&self) -> &Ecosystem<T> {
        self.trajectory.last().expect("trajectory holds the initial state")
    }
}

/// Builds the insider's two trades for a one- or two-pool ecosystem whose
/// pools share a reserve ratio.
pub fn insider_optimal_trades<T: Scalar>(eco: &Ecosystem<T>, r_new: &T) -> Result<InsiderPlan<T>> {
    if eco.len() > 2 {
        return Err(AmmError::domain("the insider benchmark uses one or two pools"));
    }
    if !r_new.is_positive() {
        return Err(AmmError::domain("target ratio must be positive"));
    }
    let r_init = eco.global_ratio();
    if eco.pools().iter().any(|p| !p.ratio().close_to(&r_init, &r_init)) {
        return Err(AmmError::domain("pools must start at a common reserve ratio"));
    }
    let large = eco
        .pools()
        .iter()
        .fold(&eco.pools()[0], |best, p| if p.x > best.x { p } else { best })
        .id;
    let small = eco.ids().find(|&id| id != large);
    let mut plan = InsiderPlan {
        orders: Vec::new(),
        trajectory: vec![eco.clone()],
        large_pool: large,
        small_pool: small,
        profit: T::zero(),
        closed_form_small: None,
    };
    if *r_new == r_init {
        return Ok(plan);
    }

    // Work in the orientation where the insider sends X (the ratio falls).
    let relabel = *r_new > r_init;
    let (canon, ri, rn, side) = if relabel {
        (eco.relabeled(), T::one() / r_init, T::one() / r_new.clone(), Side::SendY)
    } else {
        (eco.clone(), r_init, r_new.clone(), Side::SendX)
    };
    let unlabel = |e: Ecosystem<T>| if relabel { e.relabeled() } else { e };

    let p1 = canon.pool(large)?.clone();
    let s = (ri.clone() / rn.clone()).sqrt();
    let dx1 = p1.x.clone() * (s.clone() - T::one());
    let first = SwapOrder::new(large, Side::SendX, dx1.clone(), SenderTag::Insider);
    let (after_first, out1) = apply_swap(&canon, &first, Algorithm::Gmm)?;
    let mut net_x = -dx1.clone();
    let mut net_y = out1;
    plan.orders.push(SwapOrder::new(large, side, dx1, SenderTag::Insider));
    plan.trajectory.push(unlabel(after_first.clone()));

    if let Some(small) = small {
        let p2 = canon.pool(small)?.clone();
        let profit_of = |dx: &T| {
            let order = SwapOrder::new(small, Side::SendX, dx.clone(), SenderTag::Insider);
            apply_swap(&after_first, &order, Algorithm::Gmm)
                .ok()
                .map(|(_, out)| out - rn.clone() * dx.clone())
        };
        let mut hi = 10.0 * p2.x.to_f64();
        let mut best = golden_section_max(|a| profit_of(&T::from_f64(a)), 0.0, hi, REL_TOL);
        // widen the bracket if the optimum sits on its edge
        for _ in 0..8 {
            if best.0 < hi * (1.0 - 1e-9) {
                break;
            }
            hi *= 10.0;
            best = golden_section_max(|a| profit_of(&T::from_f64(a)), 0.0, hi, REL_TOL);
        }
        let dx2 = T::from_f64(best.0);
        let second = SwapOrder::new(small, Side::SendX, dx2.clone(), SenderTag::Insider);
        let (after_second, out2) = apply_swap(&after_first, &second, Algorithm::Gmm)?;
        net_x = net_x - dx2.clone();
        net_y = net_y + out2;
        plan.orders.push(SwapOrder::new(small, side, dx2, SenderTag::Insider));
        plan.trajectory.push(unlabel(after_second));

        // x2 * (sqrt(s (k s + 1)(k + s)) - k s) with k = x1 / x2
        let (sf, rnf) = (s.to_f64(), rn.to_f64());
        let k = p1.x.to_f64() / p2.x.to_f64();
        let x2f = p2.x.to_f64() * ((sf * (k * sf + 1.0) * (k + sf)).sqrt() - k * sf);
        let canon_final = PoolState { id: small, x: x2f, y: rnf * x2f };
        plan.closed_form_small = Some(if relabel { canon_final.relabeled() } else { canon_final });
    }

    let canon_profit = net_y + rn * net_x;
    plan.profit = if relabel { canon_profit * r_new.clone() } else { canon_profit };
    Ok(plan)
}
