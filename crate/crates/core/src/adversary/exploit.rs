//! Replays an order sequence and looks for exploitability witnesses: pools
//! that end weakly below their initial reserves in both assets and strictly
//! below in at least one.

use crate::error::Result;
use crate::num::Scalar;
use crate::pool::{Ecosystem, PoolId};
use crate::pricing::{Algorithm, SwapOrder};
use crate::rebalance::execute_swap;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolDelta<T> {
    pub pool: PoolId,
    /// Final minus initial X reserve.
    pub dx: T,
    /// Final minus initial Y reserve.
    pub dy: T,
    pub exploited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitReport<T> {
    pub deltas: Vec<PoolDelta<T>>,
    /// Output of each order, in the asset it received.
    pub outputs: Vec<T>,
    pub final_state: Ecosystem<T>,
}

impl<T> ExploitReport<T> {
    pub fn witnesses(&self) -> impl Iterator<Item = PoolId> + '_ {
        self.deltas.iter().filter(|d| d.exploited).map(|d| d.pool)
    }

    pub fn is_exploited(&self) -> bool {
        self.deltas.iter().any(|d| d.exploited)
    }
}

pub fn replay_exploit_sequence<T: Scalar>(
    eco: &Ecosystem<T>,
    orders: &[SwapOrder<T>],
    alg: Algorithm,
) -> Result<ExploitReport<T>> {
    let mut state = eco.clone();
    let mut outputs = Vec::with_capacity(orders.len());
    for order in orders {
        let (next, out) = execute_swap(&state, order, alg)?;
        state = next;
        outputs.push(out);
    }
    let deltas = eco
        .pools()
        .iter()
        .zip(state.pools())
        .map(|(before, after)| {
            let dx = after.x.clone() - before.x.clone();
            let dy = after.y.clone() - before.y.clone();
            let weakly_below = !dx.is_positive() && !dy.is_positive();
            let strictly = dx.is_negative() || dy.is_negative();
            PoolDelta {
                pool: before.id,
                exploited: weakly_below && strictly,
                dx,
                dy,
            }
        })
        .collect();
    Ok(ExploitReport {
        deltas,
        outputs,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;
    use crate::pool::Side;
    use crate::pricing::apply_swap;

    fn q(n: i64) -> Exact {
        Exact::from_int(n)
    }

    fn twins() -> Ecosystem<Exact> {
        Ecosystem::from_reserves([(q(100), q(400_000)), (q(100), q(400_000))]).unwrap()
    }

    /// Two 10 ETH sales, then each UST proceeds sent back to the first and
    /// second pool respectively, under `alg`.
    fn part5_orders(alg: Algorithm) -> Vec<SwapOrder<Exact>> {
        let eco = twins();
        let o1 = SwapOrder::trader(PoolId(0), Side::SendX, q(10));
        let (eco, out1) = apply_swap(&eco, &o1, alg).unwrap();
        let o2 = SwapOrder::trader(PoolId(1), Side::SendX, q(10));
        let (_, out2) = apply_swap(&eco, &o2, alg).unwrap();
        vec![
            o1,
            o2,
            SwapOrder::trader(PoolId(0), Side::SendY, out1),
            SwapOrder::trader(PoolId(1), Side::SendY, out2),
        ]
    }

    #[test]
    fn ngmm_sequence_drains_first_pool() {
        let rep = replay_exploit_sequence(&twins(), &part5_orders(Algorithm::Ngmm), Algorithm::Ngmm).unwrap();
        assert_eq!(rep.outputs[0], Exact::from_ratio(800_000, 21));
        assert!((rep.outputs[1].to_f64() - 34_632.03).abs() < 0.005);
        assert!((rep.outputs[2].to_f64() - 10.95).abs() < 0.005);
        assert!((rep.deltas[0].dx.to_f64() + 0.95).abs() < 0.005);
        assert_eq!(rep.deltas[0].dy, q(0));
        assert!(rep.deltas[0].exploited);
        assert!((rep.deltas[1].dx.to_f64() - 0.95).abs() < 0.005);
        assert_eq!(rep.witnesses().collect::<Vec<_>>(), vec![PoolId(0)]);
    }

    #[test]
    fn gmm_sequence_is_harmless() {
        for orders in [part5_orders(Algorithm::Ngmm), part5_orders(Algorithm::Gmm)] {
            let rep = replay_exploit_sequence(&twins(), &orders, Algorithm::Gmm).unwrap();
            assert!(!rep.is_exploited());
        }
    }

    #[test]
    fn empty_sequence() {
        let rep = replay_exploit_sequence(&twins(), &[], Algorithm::Gmm).unwrap();
        assert!(rep.deltas.iter().all(|d| d.dx == q(0) && d.dy == q(0) && !d.exploited));
    }
}
