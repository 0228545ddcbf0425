//! Elementary sandwich attacks: simulation and closed forms.
//!
//! The attacker front-runs the victim with `attack_dx` of the asset the
//! victim sends, and back-runs by sending exactly the front-run's output.
//! Profits are in units of the sent asset and may be negative.

use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::pool::{Ecosystem, PoolId, Side};
use crate::pricing::{apply_swap, cpmm_out, quote, Algorithm, Quote, SenderTag, SwapOrder};

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichSpec<T> {
    pub pool_id: PoolId,
    /// Asset sent by both the victim and the front-run.
    pub side: Side,
    pub victim_dx: T,
    pub attack_dx: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport<T> {
    /// Back-run output minus `attack_dx`.
    pub attacker_profit: T,
    pub victim_out: T,
    /// What the victim would have received without the front-run.
    pub victim_out_unattacked: T,
    pub front_run: Quote<T>,
    pub victim: Quote<T>,
    pub back_run: Quote<T>,
    /// Ecosystem before the attack and after each of the three legs.
    pub trajectory: Vec<Ecosystem<T>>,
}

/// Runs front-run, victim and back-run in sequence under `alg`.
pub fn simulate_sandwich<T: Scalar>(
    eco: &Ecosystem<T>,
    spec: &SandwichSpec<T>,
    alg: Algorithm,
) -> Result<SandwichReport<T>> {
    if !spec.victim_dx.is_positive() {
        return Err(AmmError::domain("sandwich victim order must be positive"));
    }
    if spec.attack_dx.is_negative() {
        return Err(AmmError::NegativeAmount(spec.attack_dx.to_f64()));
    }
    let victim_order = SwapOrder::trader(spec.pool_id, spec.side, spec.victim_dx.clone());
    let victim_out_unattacked = quote(eco, &victim_order, alg)?.amount_out;

    let front = SwapOrder::new(spec.pool_id, spec.side, spec.attack_dx.clone(), SenderTag::Attacker);
    let front_run = quote(eco, &front, alg)?;
    let (after_front, front_out) = apply_swap(eco, &front, alg)?;

    let victim = quote(&after_front, &victim_order, alg)?;
    let (after_victim, victim_out) = apply_swap(&after_front, &victim_order, alg)?;

    let back = SwapOrder::new(spec.pool_id, spec.side.flip(), front_out, SenderTag::Attacker);
    let back_run = quote(&after_victim, &back, alg)?;
    let (after_back, back_out) = apply_swap(&after_victim, &back, alg)?;

    Ok(SandwichReport {
        attacker_profit: back_out - spec.attack_dx.clone(),
        victim_out,
        victim_out_unattacked,
        front_run,
        victim,
        back_run,
        trajectory: vec![eco.clone(), after_front, after_victim, after_back],
    })
}

/// Input needed to receive `out` from a constant-product pool `(x, y)`
/// when sending X: `x * out / (y - out)`.
pub fn cpmm_in_for_out<T: Scalar>(out: &T, x: &T, y: &T) -> Result<T> {
    if out >= y {
        return Err(AmmError::domain("requested output exceeds the reserve"));
    }
    Ok(x.clone() * out.clone() / (y.clone() - out.clone()))
}

/// How much more the victim paid than needed for what it received, using
/// the unattacked pool under constant-product pricing.
pub fn victim_overpayment<T: Scalar>(eco: &Ecosystem<T>, spec: &SandwichSpec<T>, victim_out: &T) -> Result<T> {
    let pool = eco.pool(spec.pool_id)?;
    let needed = cpmm_in_for_out(victim_out, pool.reserve_in(spec.side), pool.reserve_out(spec.side))?;
    Ok(spec.victim_dx.clone() - needed)
}

/// Closed-form constant-product sandwich profit for a pool holding `x_i`
/// of the sent asset.
pub fn sandwich_profit_cpmm_closed<T: Scalar>(x_i: &T, victim_dx: &T, attack_dx: &T) -> Result<T> {
    if !x_i.is_positive() {
        return Err(AmmError::domain("pool reserve must be positive"));
    }
    let one = T::one();
    let d_hat = attack_dx.clone() / x_i.clone();
    let d = victim_dx.clone() / x_i.clone();
    let s = one.clone() + d_hat.clone() + d.clone();
    let ratio = s.clone() * s.clone() / (s * (one.clone() + d_hat) - d);
    Ok((ratio - one) * attack_dx.clone())
}

/// Closed-form GMM sandwich profit when the attacked pool and the ecosystem
/// share one reserve ratio; `x_global` is the aggregate reserve of the sent
/// asset.
pub fn sandwich_profit_gmm_closed<T: Scalar>(x_i: &T, x_global: &T, victim_dx: &T, attack_dx: &T) -> Result<T> {
    if !x_i.is_positive() {
        return Err(AmmError::domain("pool reserve must be positive"));
    }
    if x_global < x_i {
        return Err(AmmError::domain("global reserve must be at least the pool reserve"));
    }
    let one = T::one();
    let both = attack_dx.clone() + victim_dx.clone();
    let local = one.clone() + both.clone() / x_i.clone();
    let global = one.clone() + both / x_global.clone();
    let front = one.clone() + attack_dx.clone() / x_i.clone();
    let ratio = global * local.clone() / (local * front - victim_dx.clone() / x_global.clone());
    Ok((ratio - one) * attack_dx.clone())
}

/// Sandwich profit when the other pools hold `beta` times the attacked
/// pool's reserves. Ratios are relative to the attacked pool:
/// `delta = victim_dx / x_i`, `delta_hat = attack_dx / x_i`.
pub fn sandwich_profit_beta<T: Scalar>(x_i: &T, beta: &T, victim_dx: &T, attack_dx: &T) -> Result<T> {
    if !x_i.is_positive() {
        return Err(AmmError::domain("pool reserve must be positive"));
    }
    if beta.is_negative() {
        return Err(AmmError::domain("beta must be nonnegative"));
    }
    let one = T::one();
    let scale = one.clone() + beta.clone();
    let delta = victim_dx.clone() / x_i.clone();
    let delta_hat = attack_dx.clone() / x_i.clone();
    let both = delta.clone() + delta_hat.clone();
    let num = (one.clone() + both.clone() / scale.clone()) * (one.clone() + both.clone());
    let den = (one.clone() + delta_hat) * (one.clone() + both) - delta / scale;
    Ok((num / den - one) * attack_dx.clone())
}

/// Sandwich profit when a pool of `x_global` is split evenly into `n` GMM
/// pools and the attack hits one of them. Ratios are relative to the whole:
/// `delta = victim_dx / x_global`, `delta_hat = attack_dx / x_global`.
pub fn sandwich_profit_nsplit<T: Scalar>(x_global: &T, n: u32, victim_dx: &T, attack_dx: &T) -> Result<T> {
    if n == 0 {
        return Err(AmmError::domain("split count must be at least one"));
    }
    if !x_global.is_positive() {
        return Err(AmmError::domain("pool reserve must be positive"));
    }
    let one = T::one();
    let n = T::from_int(n as i64);
    let delta = victim_dx.clone() / x_global.clone();
    let delta_hat = attack_dx.clone() / x_global.clone();
    let both = delta.clone() + delta_hat.clone();
    let split_both = one.clone() + n.clone() * both.clone();
    let num = (one.clone() + both) * split_both.clone();
    let den = (one.clone() + n * delta_hat) * split_both - delta;
    Ok((num / den - one) * attack_dx.clone())
}

/// Three-leg constant-product sandwich on a bare `(x_i, y_i)` pool.
pub fn sandwich_profit_cpmm_sim<T: Scalar>(x_i: &T, y_i: &T, victim_dx: &T, attack_dx: &T) -> Result<T> {
    let front_out = cpmm_out(attack_dx, x_i, y_i)?;
    let x1 = x_i.clone() + attack_dx.clone();
    let y1 = y_i.clone() - front_out.clone();
    let victim_out = cpmm_out(victim_dx, &x1, &y1)?;
    let x2 = x1 + victim_dx.clone();
    let y2 = y1 - victim_out;
    Ok(cpmm_out(&front_out, &y2, &x2)? - attack_dx.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;

    fn q(n: i64) -> Exact {
        Exact::from_int(n)
    }

    fn toy_pool() -> Ecosystem<Exact> {
        // (ETH, UST); the victim and attacker send UST
        Ecosystem::from_reserves([(q(100), q(400_000))]).unwrap()
    }

    fn toy_spec(attack: i64) -> SandwichSpec<Exact> {
        SandwichSpec {
            pool_id: PoolId(0),
            side: Side::SendY,
            victim_dx: q(40_000),
            attack_dx: q(attack),
        }
    }

    #[test]
    fn cpmm_toy_sandwich() {
        let rep = simulate_sandwich(&toy_pool(), &toy_spec(60_000), Algorithm::Cpmm).unwrap();
        assert!((rep.attacker_profit.to_f64() - 10_093.457_943_925).abs() < 1e-6);
        assert!((rep.victim_out.to_f64() - 6.9565).abs() < 5e-5);
        assert!((rep.front_run.amount_out.to_f64() - 13.0435).abs() < 5e-5);
        let last = &rep.trajectory[3].pools()[0];
        // the pool keeps the attacker's net UST and loses the victim's ETH
        assert_eq!(last.x, q(100) - rep.victim_out.clone());
        assert_eq!(last.y, q(500_000) - rep.back_run.amount_out.clone());
        assert!((last.x.to_f64() - 93.0435).abs() < 5e-5);
        assert_eq!(
            rep.attacker_profit,
            sandwich_profit_cpmm_closed(&q(400_000), &q(40_000), &q(60_000)).unwrap()
        );
    }

    #[test]
    fn victim_overpayment_equals_profit_in_toy() {
        let spec = toy_spec(60_000);
        let rep = simulate_sandwich(&toy_pool(), &spec, Algorithm::Cpmm).unwrap();
        let over = victim_overpayment(&toy_pool(), &spec, &rep.victim_out).unwrap();
        assert_eq!(over, rep.attacker_profit);
        assert!((rep.victim_out_unattacked.to_f64() - 9.0909).abs() < 1e-4);
    }

    #[test]
    fn gmm_toy_sandwich() {
        let eco = Ecosystem::from_reserves([(q(100), q(400_000)), (q(100), q(400_000))]).unwrap();
        let rep = simulate_sandwich(&eco, &toy_spec(60_000), Algorithm::Gmm).unwrap();
        assert!((rep.attacker_profit.to_f64() - 810.810_810_81).abs() < 1e-6);
        assert_eq!(
            rep.attacker_profit,
            sandwich_profit_gmm_closed(&q(400_000), &q(800_000), &q(40_000), &q(60_000)).unwrap()
        );
        // pool 2 untouched throughout
        assert!(rep.trajectory.iter().all(|e| e.pools()[1] == eco.pools()[1]));
    }

    #[test]
    fn zero_attack_is_harmless() {
        let rep = simulate_sandwich(&toy_pool(), &toy_spec(0), Algorithm::Cpmm).unwrap();
        assert_eq!(rep.attacker_profit, q(0));
        assert_eq!(rep.victim_out, rep.victim_out_unattacked);
        assert_eq!(sandwich_profit_cpmm_closed(&q(400_000), &q(40_000), &q(0)).unwrap(), q(0));
        assert_eq!(
            sandwich_profit_gmm_closed(&q(400_000), &q(800_000), &q(40_000), &q(0)).unwrap(),
            q(0)
        );
    }

    #[test]
    fn closed_form_examples() {
        let p = sandwich_profit_cpmm_closed(&q(400_000), &q(40_000), &q(20_000)).unwrap();
        let sim = sandwich_profit_cpmm_sim(&q(400_000), &q(100), &q(40_000), &q(20_000)).unwrap();
        assert_eq!(p, sim);
        assert!((p.to_f64() - 3_882.618_510_158).abs() < 1e-6);

        let degenerate = sandwich_profit_gmm_closed(&q(400_000), &q(400_000), &q(40_000), &q(60_000)).unwrap();
        assert_eq!(degenerate, sandwich_profit_cpmm_closed(&q(400_000), &q(40_000), &q(60_000)).unwrap());
        assert!(sandwich_profit_gmm_closed(&q(400_000), &q(300_000), &q(1), &q(1)).is_err());
    }

    #[test]
    fn beta_and_nsplit_reductions() {
        let cp = sandwich_profit_cpmm_closed(&q(400_000), &q(40_000), &q(60_000)).unwrap();
        assert_eq!(sandwich_profit_beta(&q(400_000), &q(0), &q(40_000), &q(60_000)).unwrap(), cp);
        assert_eq!(sandwich_profit_nsplit(&q(400_000), 1, &q(40_000), &q(60_000)).unwrap(), cp);
        let toy = sandwich_profit_gmm_closed(&q(400_000), &q(800_000), &q(40_000), &q(60_000)).unwrap();
        assert_eq!(sandwich_profit_beta(&q(400_000), &q(1), &q(40_000), &q(60_000)).unwrap(), toy);
        assert_eq!(sandwich_profit_nsplit(&q(800_000), 2, &q(40_000), &q(60_000)).unwrap(), toy);
        assert!(sandwich_profit_nsplit(&q(800_000), 0, &q(1), &q(1)).is_err());
        assert!(sandwich_profit_beta(&q(800_000), &q(-1), &q(1), &q(1)).is_err());
    }

    #[test]
    fn profits_fall_with_beta_and_n() {
        let mut last = f64::INFINITY;
        for beta in [0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 10.0, 100.0] {
            let p = sandwich_profit_beta(&400_000.0, &beta, &40_000.0, &60_000.0).unwrap();
            assert!(p < last);
            last = p;
        }
        let mut last = f64::INFINITY;
        for n in 1..=12 {
            let p = sandwich_profit_nsplit(&800_000.0, n, &40_000.0, &60_000.0).unwrap();
            assert!(p < last);
            last = p;
        }
    }
}
