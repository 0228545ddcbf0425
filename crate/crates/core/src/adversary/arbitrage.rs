//! Arbitrage search: optimised two-leg cycles and a randomised multi-leg
//! certificate.
//!
//! A cycle starts and ends in the same asset. Its profit is the arbitrageur's
//! net position valued in Y at the global ratio of the starting ecosystem.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::optimize::golden_section_max;
use crate::pool::{Ecosystem, PoolId, Side};
use crate::pricing::{Algorithm, SenderTag, SwapOrder};
use crate::rebalance::execute_swap;

const REL_TOL: f64 = 1e-12;
const PARTIALS: [(i64, i64); 4] = [(1, 4), (1, 2), (3, 4), (1, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct ArbLeg<T> {
    pub pool_id: PoolId,
    pub side: Side,
    pub amount_in: T,
    pub amount_out: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageCycle<T> {
    pub legs: Vec<ArbLeg<T>>,
    /// Asset the cycle starts and ends in.
    pub start: Side,
    /// Signed net holdings change of the arbitrageur.
    pub net_x: T,
    pub net_y: T,
    /// `net_y + r * net_x` with `r` the initial global ratio.
    pub profit: T,
    pub final_state: Ecosystem<T>,
}

fn run_cycle<T: Scalar>(
    eco: &Ecosystem<T>,
    start: Side,
    steps: &[(PoolId, Side, Option<T>)],
    alg: Algorithm,
) -> Result<ArbitrageCycle<T>> {
    let r = eco.global_ratio();
    let (mut net_x, mut net_y) = (T::zero(), T::zero());
    let mut state = eco.clone();
    let mut legs: Vec<ArbLeg<T>> = Vec::with_capacity(steps.len());
    for (pool_id, side, amount) in steps {
        // `None` forwards the previous leg's whole output
        let amount = match amount {
            Some(a) => a.clone(),
            None => legs.last().map_or_else(T::zero, |l| l.amount_out.clone()),
        };
        let order = SwapOrder::new(*pool_id, *side, amount.clone(), SenderTag::Arbitrageur);
        let (next, out) = execute_swap(&state, &order, alg)?;
        match side {
            Side::SendX => {
                net_x = net_x - amount.clone();
                net_y = net_y + out.clone();
            }
            Side::SendY => {
                net_y = net_y - amount.clone();
                net_x = net_x + out.clone();
            }
        }
        legs.push(ArbLeg {
            pool_id: *pool_id,
            side: *side,
            amount_in: amount.clone(),
            amount_out: out,
        });
        state = next;
    }
    let profit = net_y.clone() + r * net_x.clone();
    Ok(ArbitrageCycle {
        legs,
        start,
        net_x,
        net_y,
        profit,
        final_state: state,
    })
}

/// Two-leg cycle: send `a` of `start` to `first`, forward the whole output
/// to `second`.
fn forward_cycle<T: Scalar>(
    eco: &Ecosystem<T>,
    first: PoolId,
    second: PoolId,
    start: Side,
    a: T,
    alg: Algorithm,
) -> Result<ArbitrageCycle<T>> {
    run_cycle(eco, start, &[(first, start, Some(a)), (second, start.flip(), None)], alg)
}

/// Best two-leg cycle through `first` then `second` starting in `start`,
/// found by golden-section search over the first leg on `[0, 10 * reserve]`.
/// The search runs in `f64`; the returned cycle is evaluated in `T`.
pub fn best_two_leg_cycle<T: Scalar>(
    eco: &Ecosystem<T>,
    first: PoolId,
    second: PoolId,
    start: Side,
    alg: Algorithm,
) -> Result<ArbitrageCycle<T>> {
    let hi = 10.0 * eco.pool(first)?.reserve_in(start).to_f64();
    eco.pool(second)?;
    let probe = eco.to_f64();
    let (a, _) = golden_section_max(
        |a| forward_cycle(&probe, first, second, start, a, alg).ok().map(|c| c.profit),
        0.0,
        hi,
        REL_TOL,
    );
    forward_cycle(eco, first, second, start, T::from_f64(a), alg)
}

/// Most profitable two-leg cycle between the two pools of `eco`, over both
/// pool orders and both starting assets.
pub fn best_two_pool_arbitrage<T: Scalar>(eco: &Ecosystem<T>, alg: Algorithm) -> Result<ArbitrageCycle<T>> {
    if eco.len() != 2 {
        return Err(AmmError::domain("two-pool arbitrage needs exactly two pools"));
    }
    best_pairwise_cycle(eco, alg)
}

fn best_pairwise_cycle<T: Scalar>(eco: &Ecosystem<T>, alg: Algorithm) -> Result<ArbitrageCycle<T>> {
    let ids: Vec<PoolId> = eco.ids().collect();
    let mut best: Option<ArbitrageCycle<T>> = None;
    for &first in &ids {
        for &second in ids.iter().filter(|&&s| s != first) {
            for start in [Side::SendX, Side::SendY] {
                let cycle = best_two_leg_cycle(eco, first, second, start, alg)?;
                if best.as_ref().is_none_or(|b| cycle.profit > b.profit) {
                    best = Some(cycle);
                }
            }
        }
    }
    best.ok_or_else(|| AmmError::domain("arbitrage needs at least two pools"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport<T> {
    /// Largest profit seen, in Y at the initial global ratio. Zero when no
    /// cycle was evaluated.
    pub max_profit: T,
    pub best_cycle: Option<ArbitrageCycle<T>>,
    pub samples: usize,
    /// Samples abandoned because a leg could not execute (nGMM depletion).
    pub failed: usize,
}

/// Randomised search for profitable cycles.
///
/// Evaluates `samples` random cycles of two to six legs: a random pool and
/// size for the opening leg, random pools, assets and partial fractions for
/// the middle legs, and a closing leg that converts everything back to the
/// starting asset. With two or more pools the optimised two-leg cycle of
/// every ordered pool pair is evaluated as well.
pub fn no_arbitrage_certificate<T: Scalar>(
    eco: &Ecosystem<T>,
    alg: Algorithm,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport<T>> {
    let mut report = CertificateReport {
        max_profit: T::zero(),
        best_cycle: None,
        samples,
        failed: 0,
    };
    let consider = |cycle: ArbitrageCycle<T>, report: &mut CertificateReport<T>| {
        if report.best_cycle.is_none() || cycle.profit > report.max_profit {
            report.max_profit = cycle.profit.clone();
            report.best_cycle = Some(cycle);
        }
    };
    if eco.len() >= 2 {
        consider(best_pairwise_cycle(eco, alg)?, &mut report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<PoolId> = eco.ids().collect();
    for _ in 0..samples {
        match random_cycle(eco, &ids, alg, &mut rng) {
            Ok(cycle) => consider(cycle, &mut report),
            Err(AmmError::Depletion { .. }) => report.failed += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

fn random_cycle<T: Scalar>(
    eco: &Ecosystem<T>,
    ids: &[PoolId],
    alg: Algorithm,
    rng: &mut ChaCha8Rng,
) -> Result<ArbitrageCycle<T>> {
    let start = if rng.gen_bool(0.5) { Side::SendX } else { Side::SendY };
    let n_legs = rng.gen_range(2..=6);
    let opening = *ids.choose(rng).expect("nonempty ecosystem");
    let m = rng.gen_range(1..=9);
    let e = rng.gen_range(0..=4u32);
    let size = eco.pool(opening)?.reserve_in(start).clone() * T::from_ratio(m, 10i64.pow(e));

    let mut steps = vec![(opening, start, Some(size.clone()))];
    let mut state = eco.clone();
    // (start asset, other asset) holdings of the arbitrageur
    let (mut held_start, mut held_other) = (T::zero(), T::zero());
    let order = SwapOrder::new(opening, start, size, SenderTag::Arbitrageur);
    let (next, out) = execute_swap(&state, &order, alg)?;
    state = next;
    held_other = held_other + out;

    for _ in 1..n_legs - 1 {
        let send_start = match (held_start.is_positive(), held_other.is_positive()) {
            (true, true) => rng.gen_bool(0.5),
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        let (num, den) = *PARTIALS.choose(rng).expect("nonempty");
        let frac = T::from_ratio(num, den);
        let pool = *ids.choose(rng).expect("nonempty ecosystem");
        let (side, amount) = if send_start {
            (start, held_start.clone() * frac)
        } else {
            (start.flip(), held_other.clone() * frac)
        };
        let order = SwapOrder::new(pool, side, amount.clone(), SenderTag::Arbitrageur);
        let (next, out) = execute_swap(&state, &order, alg)?;
        state = next;
        if send_start {
            held_start = held_start - amount.clone();
            held_other = held_other + out;
        } else {
            held_other = held_other - amount.clone();
            held_start = held_start + out;
        }
        steps.push((pool, side, Some(amount)));
    }
    if held_other.is_positive() {
        let pool = *ids.choose(rng).expect("nonempty ecosystem");
        steps.push((pool, start.flip(), Some(held_other)));
    }
    run_cycle(eco, start, &steps, alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;

    fn q(n: i64) -> Exact {
        Exact::from_int(n)
    }

    /// Toy ecosystem after a trader bought 10 ETH from the first pool with
    /// UST; reserves are (ETH, UST).
    fn part1_after_trade() -> Ecosystem<Exact> {
        Ecosystem::from_reserves([(q(90), Exact::from_ratio(4_000_000, 9)), (q(100), q(400_000))]).unwrap()
    }

    #[test]
    fn cpmm_finds_the_toy_opportunity() {
        let eco = part1_after_trade();
        let best = best_two_pool_arbitrage(&eco, Algorithm::Cpmm).unwrap();
        // hand-picked cycle: 5 ETH into pool 0, buy 5 ETH back from pool 1
        let hand = run_cycle(
            &eco,
            Side::SendY,
            &[
                (PoolId(1), Side::SendY, Some(Exact::from_ratio(400_000, 19))),
                (PoolId(0), Side::SendX, Some(q(5))),
            ],
            Algorithm::Cpmm,
        )
        .unwrap();
        assert!((hand.profit.to_f64() - 2_339.18).abs() < 0.01);
        // the hand-picked size is the optimum itself
        assert!(best.profit.to_f64() >= 2_339.0);
        assert!((best.profit.clone() - hand.profit).abs_val().to_f64() < 1e-6);
        let (ex, ey) = (400_000.0 * 90.0 / 190.0, 4_000_000.0 / 9.0 * 100.0 / 190.0);
        let closed = (f64::sqrt(ey) - f64::sqrt(ex)).powi(2);
        assert!((best.profit.to_f64() - closed).abs() < 1e-6);
    }

    #[test]
    fn gmm_cycle_nets_zero() {
        let eco = part1_after_trade();
        let cycle = forward_cycle(&eco, PoolId(0), PoolId(1), Side::SendX, q(5), Algorithm::Gmm).unwrap();
        assert_eq!(cycle.legs[1].amount_out, q(5));
        assert_eq!(cycle.net_x, q(0));
        assert_eq!(cycle.profit, q(0));
        let best = best_two_pool_arbitrage(&eco, Algorithm::Gmm).unwrap();
        assert!(!best.profit.is_positive());
    }

    #[test]
    fn equal_ratios_leave_nothing() {
        let eco = Ecosystem::from_reserves([(q(100), q(400_000)), (q(50), q(200_000))]).unwrap();
        for alg in [Algorithm::Cpmm, Algorithm::Gmm] {
            let best = best_two_pool_arbitrage(&eco, alg).unwrap();
            assert!(!best.profit.is_positive(), "{alg}");
        }
    }

    #[test]
    fn certificate_separates_cpmm_and_gmm() {
        let eco = part1_after_trade().to_f64().map(|v| Exact::from_f64(*v));
        let gmm = no_arbitrage_certificate(&eco, Algorithm::Gmm, 300, 7).unwrap();
        assert!(!gmm.max_profit.is_positive());
        let cpmm = no_arbitrage_certificate(&part1_after_trade(), Algorithm::Cpmm, 300, 7).unwrap();
        assert!(cpmm.max_profit.to_f64() >= 2_339.0);
    }

    #[test]
    fn single_pool_round_trips_lose() {
        let eco = Ecosystem::from_reserves([(q(100), q(400_000))]).unwrap();
        let rep = no_arbitrage_certificate(&eco, Algorithm::Cpmm, 200, 1).unwrap();
        assert!(!rep.max_profit.is_positive());
        assert!(best_two_pool_arbitrage(&eco, Algorithm::Cpmm).is_err());
    }

    #[test]
    fn certificate_is_seeded() {
        let eco = part1_after_trade();
        let a = no_arbitrage_certificate(&eco, Algorithm::Cpmm, 50, 99).unwrap();
        let b = no_arbitrage_certificate(&eco, Algorithm::Cpmm, 50, 99).unwrap();
        assert_eq!(a, b);
    }
}
