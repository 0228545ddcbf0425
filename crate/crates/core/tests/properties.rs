use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use globalmm::adversary::{
    sandwich_profit_cpmm_closed, sandwich_profit_gmm_closed, simulate_sandwich, SandwichSpec,
};
use globalmm::analytics::{il_cpmm, il_gmm_small_pool};
use globalmm::rebalance::gmm_rebal_quote;
use globalmm::replay::{parse_log, run_counterfactual, synthetic_fixture, write_log, ScenarioConfig, SyntheticOptions};
use globalmm::{
    apply_swap, cpmm_out, ngmm_out, quote, Algorithm, Branch, Classification, Ecosystem, Exact, PoolId, Scalar, Side,
    SwapOrder,
};

fn exact(cents: i64) -> Exact {
    Exact::from_ratio(cents, 100)
}

/// Two to four pools with reserves and ratios on a cent grid.
fn eco_strategy() -> impl Strategy<Value = Ecosystem<Exact>> {
    prop::collection::vec((1_000i64..1_000_000, 100i64..500_000), 2..=4).prop_map(|pools| {
        Ecosystem::from_reserves(pools.into_iter().map(|(x, r)| (exact(x), exact(x) * exact(r)))).unwrap()
    })
}

fn order_strategy() -> impl Strategy<Value = (u32, bool, i64)> {
    (0u32..4, any::<bool>(), 1i64..2_000)
}

fn order_for(eco: &Ecosystem<Exact>, (pool, send_x, permille): (u32, bool, i64)) -> SwapOrder<Exact> {
    let pool = PoolId(pool % eco.len() as u32);
    let side = if send_x { Side::SendX } else { Side::SendY };
    let amount = eco.pool(pool).unwrap().reserve_in(side).clone() * Exact::from_ratio(permille, 1_000);
    SwapOrder::trader(pool, side, amount)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cpmm_keeps_the_product(eco in eco_strategy(), o in order_strategy()) {
        let order = order_for(&eco, o);
        let (next, out) = apply_swap(&eco, &order, Algorithm::Cpmm).unwrap();
        let (before, after) = (eco.pool(order.pool_id).unwrap(), next.pool(order.pool_id).unwrap());
        prop_assert_eq!(before.product(), after.product());
        prop_assert!(&out < before.reserve_out(order.side));
    }

    #[test]
    fn gmm_is_the_smaller_quote(eco in eco_strategy(), o in order_strategy()) {
        let order = order_for(&eco, o);
        let g = quote(&eco, &order, Algorithm::Gmm).unwrap();
        let c = quote(&eco, &order, Algorithm::Cpmm).unwrap();
        let n = quote(&eco, &order, Algorithm::Ngmm).unwrap();
        prop_assert!(g.amount_out <= c.amount_out);
        prop_assert!(g.amount_out <= n.amount_out);
        prop_assert_eq!(g.branch == Branch::GlobalNgmm, g.classification == Classification::Convergent);
        if g.classification == Classification::Divergent {
            prop_assert_eq!(&g.amount_out, &c.amount_out);
        }
    }

    #[test]
    fn send_y_is_send_x_on_swapped_labels(eco in eco_strategy(), o in order_strategy()) {
        let order = order_for(&eco, (o.0, false, o.2));
        let direct = quote(&eco, &order, Algorithm::Gmm).unwrap();
        let flipped = SwapOrder::trader(order.pool_id, Side::SendX, order.amount_in.clone());
        let mirrored = quote(&eco.relabeled(), &flipped, Algorithm::Gmm).unwrap();
        prop_assert_eq!(direct, mirrored);
    }

    #[test]
    fn gmm_never_shrinks_a_pool_product(eco in eco_strategy(), orders in prop::collection::vec(order_strategy(), 1..6)) {
        let mut state = eco;
        for o in orders {
            let order = order_for(&state, o);
            let (next, _) = apply_swap(&state, &order, Algorithm::Gmm).unwrap();
            for (b, a) in state.pools().iter().zip(next.pools()) {
                prop_assert!(a.product() >= b.product());
            }
            state = next;
        }
    }

    #[test]
    fn ngmm_is_capped_by_the_pool(eco in eco_strategy(), o in order_strategy()) {
        let order = order_for(&eco, (o.0, true, o.2 * 50));
        let pool = eco.pool(order.pool_id).unwrap();
        let n = ngmm_out(&order.amount_in, &eco, order.pool_id).unwrap();
        prop_assert!(n <= pool.y);
    }

    #[test]
    fn rebalancing_conserves_aggregates(eco in eco_strategy(), o in order_strategy(), force in any::<bool>()) {
        let order = order_for(&eco, (o.0, true, o.2));
        let rq = gmm_rebal_quote(&order.amount_in, &eco, order.pool_id, force).unwrap();
        prop_assert_eq!(rq.rebalanced.total_x(), eco.total_x());
        prop_assert_eq!(rq.rebalanced.total_y(), eco.total_y());
        if !rq.triggered {
            prop_assert!(rq.transfers.is_empty());
            prop_assert_eq!(&rq.rebalanced, &eco);
        }
        let r = eco.global_ratio();
        for t in &rq.transfers {
            // paid at most r per unit of X
            prop_assert!(t.amount_y_received <= r.clone() * t.amount_x.clone());
        }
    }

    #[test]
    fn sandwich_closed_form_matches_simulation(
        x in 1_000i64..1_000_000, r in 100i64..500_000, v in 1i64..500_000, a in 1i64..1_000_000
    ) {
        let (x, v, a) = (exact(x), exact(v), exact(a));
        let eco = Ecosystem::from_reserves([(x.clone(), x.clone() * exact(r))]).unwrap();
        let spec = SandwichSpec { pool_id: PoolId(0), side: Side::SendX, victim_dx: v.clone(), attack_dx: a.clone() };
        let sim = simulate_sandwich(&eco, &spec, Algorithm::Cpmm).unwrap();
        prop_assert_eq!(sim.attacker_profit, sandwich_profit_cpmm_closed(&x, &v, &a).unwrap());
        // the victim never does better when attacked
        prop_assert!(sim.victim_out < sim.victim_out_unattacked);
    }

    #[test]
    fn gmm_sandwich_pays_less(x in 1_000i64..1_000_000, extra in 1i64..5_000_000, v in 1i64..500_000, a in 1i64..1_000_000) {
        let (x_i, v, a) = (exact(x), exact(v), exact(a));
        let x = x_i.clone() + exact(extra);
        let g = sandwich_profit_gmm_closed(&x_i, &x, &v, &a).unwrap();
        let c = sandwich_profit_cpmm_closed(&x_i, &v, &a).unwrap();
        prop_assert!(g < c);
    }

    #[test]
    fn impermanent_loss_ordering(ri in 0.01f64..1e5, factor in 0.01f64..100.0, alpha in 0.001f64..=0.5) {
        let rf = ri * factor;
        let c = il_cpmm(ri, rf).unwrap();
        let g = il_gmm_small_pool(ri, rf, alpha).unwrap();
        prop_assert!((0.0..1.0).contains(&c));
        prop_assert!(g >= 0.0 && g <= c);
        let back = il_gmm_small_pool(rf, ri, alpha).unwrap();
        prop_assert!((g - back).abs() <= 1e-12);
        prop_assert!((c - il_cpmm(rf, ri).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn cpmm_output_is_monotone(x in 1i64..1_000_000, y in 1i64..1_000_000, d1 in 0i64..1_000_000, d2 in 0i64..1_000_000) {
        let (x, y) = (exact(x), exact(y));
        let (lo, hi) = (exact(d1.min(d2)), exact(d1.max(d2)));
        prop_assert!(cpmm_out(&lo, &x, &y).unwrap() <= cpmm_out(&hi, &x, &y).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn synthetic_logs_round_trip(seed in any::<u64>(), attacks in 1usize..40) {
        let opts = SyntheticOptions { attacks, seed, ..SyntheticOptions::default() };
        let recs = synthetic_fixture(&opts);
        let mut buf = Vec::new();
        write_log(&recs, &mut buf).unwrap();
        prop_assert_eq!(parse_log(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn replay_ignores_record_order(seed in any::<u64>()) {
        let opts = SyntheticOptions { attacks: 30, seed, ..SyntheticOptions::default() };
        let recs = synthetic_fixture(&opts);
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = ScenarioConfig::beta(0.5);
        prop_assert_eq!(run_counterfactual(&recs, &cfg).unwrap(), run_counterfactual(&shuffled, &cfg).unwrap());
    }
}
