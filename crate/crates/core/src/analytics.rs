//! Impermanent loss, volatility classes and trader-surplus comparisons.
//!
//! Closed-form IL values are `f64`: they involve square roots of arbitrary
//! price ratios. The trajectory measurements are generic and can be run on
//! the exact backend.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adversary::insider_optimal_trades;
use crate::error::{AmmError, Result};
use crate::num::Scalar;
use crate::pool::{Ecosystem, PoolId, PoolState};
use crate::pricing::{cpmm_out, gmm_out, pool_value};
use crate::rebalance::{balanced_arbitrage, gmm_rebal_quote, trade_preservation_condition, PreservationReport};

fn check_price(p: f64, what: &str) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(AmmError::domain(format!("{what} must be a positive price, got {p}")));
    }
    Ok(())
}

/// Constant-product impermanent loss `1 - 2 / (sqrt(q) + sqrt(1/q))` with
/// `q = r_final / r_init`.
pub fn il_cpmm(r_init: f64, r_final: f64) -> Result<f64> {
    check_price(r_init, "initial ratio")?;
    check_price(r_final, "final ratio")?;
    let u = (r_final / r_init).sqrt();
    Ok(gap(u) / (u + 1.0 / u))
}

/// `u + 1/u - 2` written as a square so that no move gives exactly zero.
fn gap(u: f64) -> f64 {
    let t = u.sqrt() - 1.0 / u.sqrt();
    t * t
}

/// Impermanent loss of the small pool in the ideal benchmark, where `alpha`
/// is the small pool's share of the aggregate reserves.
pub fn il_gmm_small_pool(r_init: f64, r_final: f64, alpha: f64) -> Result<f64> {
    check_price(r_init, "initial ratio")?;
    check_price(r_final, "final ratio")?;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(AmmError::domain(format!("alpha must lie in (0, 0.5], got {alpha}")));
    }
    let k = (1.0 - alpha) / alpha;
    let u = (r_init / r_final).sqrt();
    let s = u + 1.0 / u;
    // 1 - 2 (sqrt(w) - k) / s rearranged as the CPMM loss times a factor
    // below one, which stays accurate for small moves
    let w = ((u + k) * (1.0 / u + k)).sqrt();
    Ok(gap(u) / s * (w + 1.0 - k) / (w + 1.0 + k))
}

/// `1 - V / V0`: value of the final reserves against holding the initial
/// reserves, both at `price_final`.
pub fn il_from_trajectory<T: Scalar>(initial: &PoolState<T>, fin: &PoolState<T>, price_final: &T) -> Result<T> {
    if !price_final.is_positive() {
        return Err(AmmError::domain("final price must be positive"));
    }
    Ok(T::one() - pool_value(fin, price_final) / pool_value(initial, price_final))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolatilityClass {
    Low,
    High,
}

impl fmt::Display for VolatilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VolatilityClass::Low => "low",
            VolatilityClass::High => "high",
        })
    }
}

/// High when the price moved by strictly more than a factor `lambda`.
pub fn volatility_class(price_first: f64, price_last: f64, lambda: f64) -> Result<VolatilityClass> {
    check_price(price_first, "first price")?;
    check_price(price_last, "last price")?;
    if !(lambda > 1.0) {
        return Err(AmmError::domain(format!("lambda must exceed 1, got {lambda}")));
    }
    let factor = (price_last / price_first).max(price_first / price_last);
    Ok(if factor > lambda {
        VolatilityClass::High
    } else {
        VolatilityClass::Low
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ILReport {
    pub r_init: f64,
    pub r_final: f64,
    pub alpha: f64,
    pub il_cpmm: f64,
    pub il_gmm_small_pool: f64,
    /// IL of each pool measured on the insider's trajectory.
    pub il_small_trajectory: f64,
    pub il_large_trajectory: f64,
    /// Final value of the small pool at `r_final`.
    pub v: f64,
    /// Value of holding the small pool's initial reserves at `r_final`.
    pub v0: f64,
}

/// Runs the ideal benchmark: a large pool with share `1 - alpha` and a small
/// pool with share `alpha` of `x_total`, both at `r_init`, traded by the
/// insider to `r_final`.
pub fn ideal_benchmark<T: Scalar>(x_total: &T, r_init: &T, r_final: &T, alpha: &T) -> Result<ILReport> {
    let (ri, rf, a) = (r_init.to_f64(), r_final.to_f64(), alpha.to_f64());
    let il_gmm = il_gmm_small_pool(ri, rf, a)?;
    let il_cp = il_cpmm(ri, rf)?;
    if !x_total.is_positive() {
        return Err(AmmError::domain("total reserve must be positive"));
    }
    let x_small = x_total.clone() * alpha.clone();
    let x_large = x_total.clone() - x_small.clone();
    let eco = Ecosystem::from_reserves([
        (x_large.clone(), x_large * r_init.clone()),
        (x_small.clone(), x_small * r_init.clone()),
    ])?;
    let plan = insider_optimal_trades(&eco, r_final)?;
    let fin = plan.final_state();
    let small = plan.small_pool.expect("two pools");
    let large = plan.large_pool;
    let il_of = |id: PoolId| -> Result<T> { il_from_trajectory(eco.pool(id)?, fin.pool(id)?, r_final) };
    Ok(ILReport {
        r_init: ri,
        r_final: rf,
        alpha: a,
        il_cpmm: il_cp,
        il_gmm_small_pool: il_gmm,
        il_small_trajectory: il_of(small)?.to_f64(),
        il_large_trajectory: il_of(large)?.to_f64(),
        v: pool_value(fin.pool(small)?, r_final).to_f64(),
        v0: pool_value(eco.pool(small)?, r_final).to_f64(),
    })
}

/// Best output over pools for one routing scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedQuote<T> {
    pub pool: PoolId,
    pub amount_out: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurplusComparison<T> {
    /// Constant product after balanced arbitrage.
    pub cpmm_arbitraged: RoutedQuote<T>,
    pub gmm: RoutedQuote<T>,
    pub gmm_rebal: RoutedQuote<T>,
    pub preservation: PreservationReport<T>,
    /// Ordering of the GMM quote against the arbitraged constant product.
    pub gmm_vs_cpmm: Ordering,
    /// Whether the rebalancing quote is at least the arbitraged one.
    pub rebal_dominates: bool,
}

fn best_route<T: Scalar>(
    eco: &Ecosystem<T>,
    mut quote: impl FnMut(PoolId) -> Result<T>,
) -> Result<RoutedQuote<T>> {
    let mut best: Option<RoutedQuote<T>> = None;
    for id in eco.ids() {
        let amount_out = quote(id)?;
        if best.as_ref().is_none_or(|b| amount_out > b.amount_out) {
            best = Some(RoutedQuote { pool: id, amount_out });
        }
    }
    best.ok_or(AmmError::EmptyEcosystem)
}

/// Compares the trader's best send-X quote for `dx` under the arbitraged
/// constant product, GMM and GMM with rebalancing.
pub fn trader_surplus_comparison<T: Scalar>(eco: &Ecosystem<T>, dx: &T) -> Result<SurplusComparison<T>> {
    if !dx.is_positive() {
        return Err(AmmError::domain("order size must be positive"));
    }
    let balanced = balanced_arbitrage(eco)?;
    let cpmm_arbitraged = best_route(&balanced, |id| {
        let p = balanced.pool(id)?;
        cpmm_out(dx, &p.x, &p.y)
    })?;
    let gmm = best_route(eco, |id| Ok(gmm_out(dx, eco, id)?.amount_out))?;
    let gmm_rebal = best_route(eco, |id| Ok(gmm_rebal_quote(dx, eco, id, false)?.quote.amount_out))?;
    let gmm_vs_cpmm = if gmm.amount_out.close_to(&cpmm_arbitraged.amount_out, &cpmm_arbitraged.amount_out) {
        Ordering::Equal
    } else {
        gmm.amount_out
            .partial_cmp(&cpmm_arbitraged.amount_out)
            .unwrap_or(Ordering::Equal)
    };
    let rebal_dominates = gmm_rebal.amount_out >= cpmm_arbitraged.amount_out
        || gmm_rebal.amount_out.close_to(&cpmm_arbitraged.amount_out, &cpmm_arbitraged.amount_out);
    Ok(SurplusComparison {
        preservation: trade_preservation_condition(dx, eco),
        cpmm_arbitraged,
        gmm,
        gmm_rebal,
        gmm_vs_cpmm,
        rebal_dominates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;

    fn q(n: i64) -> Exact {
        Exact::from_int(n)
    }

    #[test]
    fn cpmm_il_examples() {
        assert!((il_cpmm(4000.0, 3000.0).unwrap() - 0.0103).abs() < 5e-5);
        assert_eq!(il_cpmm(4000.0, 4000.0).unwrap(), 0.0);
        assert!((il_cpmm(1.0, 4.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(il_cpmm(2.0, 7.0).unwrap(), il_cpmm(7.0, 2.0).unwrap());
        assert!(il_cpmm(0.0, 1.0).is_err());
    }

    #[test]
    fn small_pool_il_examples() {
        assert!(il_gmm_small_pool(5.0, 5.0, 0.3).unwrap().abs() < 1e-15);
        let half = il_gmm_small_pool(1.0, 4.0, 0.5).unwrap();
        assert!((half - 0.102_944).abs() < 1e-6);
        let tiny = il_gmm_small_pool(1.0, 4.0, 0.01).unwrap();
        assert!(tiny < 0.01 && tiny > 0.0);
        assert!(il_gmm_small_pool(1.0, 4.0, 0.6).is_err());
        assert!(il_gmm_small_pool(1.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn trajectory_il_examples() {
        let init = PoolState::new(PoolId(0), q(100), q(400_000)).unwrap();
        let fin = PoolState::new(PoolId(0), Exact::parse_decimal("115.47").unwrap(), Exact::parse_decimal("346410.16").unwrap()).unwrap();
        let il = il_from_trajectory(&init, &fin, &q(3000)).unwrap();
        assert!((il.to_f64() - 0.0103).abs() < 5e-5);
        assert_eq!(il_from_trajectory(&init, &init, &q(3000)).unwrap(), q(0));
    }

    #[test]
    fn benchmark_matches_closed_forms() {
        for (alpha, factor) in [(0.5, 0.25), (0.2, 4.0), (0.05, 1.0 / 16.0), (0.35, 9.0)] {
            let rep = ideal_benchmark(
                &Exact::from_int(1000),
                &Exact::from_int(4000),
                &Exact::from_f64(4000.0 * factor),
                &Exact::from_f64(alpha),
            )
            .unwrap();
            assert!((rep.il_small_trajectory - rep.il_gmm_small_pool).abs() < 1e-9, "{rep:?}");
            assert!((rep.il_large_trajectory - rep.il_cpmm).abs() < 1e-9, "{rep:?}");
            assert!(rep.il_gmm_small_pool < rep.il_cpmm);
            assert!((1.0 - rep.v / rep.v0 - rep.il_small_trajectory).abs() < 1e-12);
        }
    }

    #[test]
    fn volatility_boundary_is_strict() {
        assert_eq!(volatility_class(4000.0, 3000.0, 10.0).unwrap(), VolatilityClass::Low);
        assert_eq!(volatility_class(4000.0, 40_001.0, 10.0).unwrap(), VolatilityClass::High);
        assert_eq!(volatility_class(4000.0, 40_000.0, 10.0).unwrap(), VolatilityClass::Low);
        assert_eq!(volatility_class(4000.0, 400.0, 10.0).unwrap(), VolatilityClass::Low);
        assert!(volatility_class(4000.0, 400.0, 1.0).is_err());
    }

    #[test]
    fn surplus_on_convergent_toy_state() {
        let eco = Ecosystem::from_reserves([(q(90), Exact::from_ratio(4_000_000, 9)), (q(100), q(400_000))]).unwrap();
        let cmp = trader_surplus_comparison(&eco, &q(10)).unwrap();
        assert!((cmp.gmm.amount_out.to_f64() - 42_222.22).abs() < 0.01);
        assert_eq!(cmp.gmm.pool, PoolId(0));
        // both pools recombine to (94.87, 421,637); 10 ETH into either
        assert!((cmp.cpmm_arbitraged.amount_out.to_f64() - 40_206.325_602_744).abs() < 1e-6);
        assert_eq!(cmp.gmm_vs_cpmm, Ordering::Greater);
        assert!(cmp.rebal_dominates);
        assert!(!cmp.preservation.holds);
    }

    #[test]
    fn surplus_on_preserving_fixture() {
        let eco = Ecosystem::from_reserves([(q(1000), q(4_000_000)), (q(10), q(50_000))]).unwrap();
        let cmp = trader_surplus_comparison(&eco, &q(100)).unwrap();
        assert!(cmp.preservation.holds);
        assert_eq!(cmp.gmm_vs_cpmm, Ordering::Less);
        assert!(cmp.gmm_rebal.amount_out > cmp.cpmm_arbitraged.amount_out);
        assert!(cmp.rebal_dominates);
    }

    #[test]
    fn surplus_on_equal_ratios() {
        let eco = Ecosystem::from_reserves([(q(100), q(400_000)), (q(50), q(200_000))]).unwrap();
        let cmp = trader_surplus_comparison(&eco, &q(1)).unwrap();
        assert_eq!(cmp.gmm.amount_out, cmp.cpmm_arbitraged.amount_out);
        assert_eq!(cmp.gmm_rebal.amount_out, cmp.gmm.amount_out);
    }
}
