use std::collections::BTreeMap;

use serde::Serialize;

use crate::analytics::{il_cpmm, il_gmm_small_pool, volatility_class, VolatilityClass};
use crate::num::Scalar;

use super::{ReplayError, ReplayRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct ILOptions {
    /// Small-pool shares to evaluate, each in (0, 0.5].
    pub alphas: Vec<f64>,
    /// Volatility threshold; pairs whose price moved by more than this
    /// factor are classed high.
    pub lambda: f64,
    /// USD prices at or below this are treated as missing.
    pub price_epsilon: f64,
}

impl Default for ILOptions {
    fn default() -> Self {
        ILOptions {
            alphas: vec![0.01, 0.05, 0.1, 0.25, 0.5],
            lambda: 10.0,
            price_epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairIl {
    pub pair_id: String,
    pub priced_records: usize,
    /// USD price of X over USD price of Y at the first and last trade.
    pub first_price: f64,
    pub last_price: f64,
    pub volatility: VolatilityClass,
    pub il_cpmm: f64,
    /// One value per configured alpha.
    pub il_gmm: Vec<f64>,
    /// First-trade reserves valued at last-trade USD prices.
    pub value_hold_usd: f64,
    pub il_cpmm_usd: f64,
    pub il_gmm_usd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassTotals {
    pub volatility: VolatilityClass,
    pub pairs: usize,
    pub value_hold_usd: f64,
    pub il_cpmm_usd: f64,
    pub il_gmm_usd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedPair {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ILScenarioReport {
    pub lambda: f64,
    pub alphas: Vec<f64>,
    pub pairs: Vec<PairIl>,
    /// Low class first, then high.
    pub totals: Vec<ClassTotals>,
    pub included_pairs: usize,
    pub excluded_pairs: usize,
    pub excluded: Vec<ExcludedPair>,
}

/// Impermanent loss per pair between its first and last priced trade, for
/// constant product and for a GMM small pool at each alpha.
pub fn il_portfolio_report(records: &[ReplayRecord], opts: &ILOptions) -> Result<ILScenarioReport, ReplayError> {
    if !(opts.lambda > 1.0) {
        return Err(ReplayError::Config(format!("lambda must exceed 1, got {}", opts.lambda)));
    }
    if let Some(a) = opts.alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.5)) {
        return Err(ReplayError::Config(format!("alpha must lie in (0, 0.5], got {a}")));
    }
    let mut by_pair: BTreeMap<&str, Vec<&ReplayRecord>> = BTreeMap::new();
    for r in records {
        by_pair.entry(r.pair_id.as_str()).or_default().push(r);
    }
    let priced = |r: &&ReplayRecord| -> Option<(f64, f64)> {
        let px = r.price_usd_x.as_ref()?.to_f64();
        let py = r.price_usd_y.as_ref()?.to_f64();
        (px > opts.price_epsilon && py > opts.price_epsilon).then_some((px, py))
    };

    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for (pair, mut recs) in by_pair {
        recs.sort_by_key(|r| r.sort_key());
        let usable: Vec<_> = recs.iter().filter_map(|r| priced(r).map(|p| (*r, p))).collect();
        if usable.len() < 2 {
            excluded.push(ExcludedPair {
                pair_id: pair.to_string(),
                reason: if usable.is_empty() {
                    "no usable USD prices".into()
                } else {
                    "fewer than two priced trades".into()
                },
            });
            continue;
        }
        let (first, (fx, fy)) = usable[0];
        let (_, (lx, ly)) = usable[usable.len() - 1];
        let (first_price, last_price) = (fx / fy, lx / ly);
        let il_c = il_cpmm(first_price, last_price)?;
        let il_g = opts
            .alphas
            .iter()
            .map(|&a| il_gmm_small_pool(first_price, last_price, a))
            .collect::<Result<Vec<_>, _>>()?;
        let value_hold_usd = first.reserve_x_before.to_f64() * lx + first.reserve_y_before.to_f64() * ly;
        pairs.push(PairIl {
            pair_id: pair.to_string(),
            priced_records: usable.len(),
            first_price,
            last_price,
            volatility: volatility_class(first_price, last_price, opts.lambda)?,
            il_cpmm: il_c,
            il_cpmm_usd: il_c * value_hold_usd,
            il_gmm_usd: il_g.iter().map(|il| il * value_hold_usd).collect(),
            il_gmm: il_g,
            value_hold_usd,
        });
    }

    let totals = [VolatilityClass::Low, VolatilityClass::High]
        .into_iter()
        .map(|class| {
            let mut t = ClassTotals {
                volatility: class,
                pairs: 0,
                value_hold_usd: 0.0,
                il_cpmm_usd: 0.0,
                il_gmm_usd: vec![0.0; opts.alphas.len()],
            };
            for p in pairs.iter().filter(|p| p.volatility == class) {
                t.pairs += 1;
                t.value_hold_usd += p.value_hold_usd;
                t.il_cpmm_usd += p.il_cpmm_usd;
                for (acc, v) in t.il_gmm_usd.iter_mut().zip(&p.il_gmm_usd) {
                    *acc += v;
                }
            }
            t
        })
        .collect();

    Ok(ILScenarioReport {
        lambda: opts.lambda,
        alphas: opts.alphas.clone(),
        included_pairs: pairs.len(),
        excluded_pairs: excluded.len(),
        pairs,
        totals,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;
    use crate::replay::{Role, Token};

    fn rec(pair: &str, block: u64, px: Option<i64>, py: Option<i64>) -> ReplayRecord {
        ReplayRecord {
            block_number: block,
            tx_index: 0,
            pair_id: pair.into(),
            role: Role::Normal,
            attack_id: String::new(),
            token_in: Token::X,
            amount_in: Exact::from_int(1),
            reserve_x_before: Exact::from_int(100),
            reserve_y_before: Exact::from_int(400_000),
            price_usd_x: px.map(Exact::from_int),
            price_usd_y: py.map(Exact::from_int),
        }
    }

    fn opts() -> ILOptions {
        ILOptions {
            alphas: vec![0.5],
            ..ILOptions::default()
        }
    }

    #[test]
    fn single_pair_toy_move() {
        let recs = vec![rec("A", 1, Some(4000), Some(1)), rec("A", 2, Some(3000), Some(1))];
        let rep = il_portfolio_report(&recs, &opts()).unwrap();
        let p = &rep.pairs[0];
        assert!((p.il_cpmm - 0.0103).abs() < 5e-5);
        assert_eq!(p.volatility, VolatilityClass::Low);
        assert!(p.il_gmm[0] < p.il_cpmm);
        assert_eq!(p.value_hold_usd, 700_000.0);
        assert_eq!(rep.totals[0].pairs, 1);
    }

    #[test]
    fn big_move_is_high() {
        let recs = vec![rec("B", 1, Some(100), Some(1)), rec("B", 5, Some(10_000), Some(1))];
        let rep = il_portfolio_report(&recs, &opts()).unwrap();
        assert_eq!(rep.pairs[0].volatility, VolatilityClass::High);
        assert_eq!(rep.totals[1].pairs, 1);
    }

    #[test]
    fn totals_are_additive() {
        let a = vec![rec("A", 1, Some(4000), Some(1)), rec("A", 2, Some(3000), Some(1))];
        let b = vec![rec("B", 1, Some(5), Some(2)), rec("B", 3, Some(7), Some(2))];
        let both: Vec<_> = a.iter().chain(&b).cloned().collect();
        let ra = il_portfolio_report(&a, &opts()).unwrap();
        let rb = il_portfolio_report(&b, &opts()).unwrap();
        let rab = il_portfolio_report(&both, &opts()).unwrap();
        let t = &rab.totals[0];
        assert_eq!(t.pairs, 2);
        assert_eq!(t.il_cpmm_usd, ra.totals[0].il_cpmm_usd + rb.totals[0].il_cpmm_usd);
        assert_eq!(t.il_gmm_usd[0], ra.totals[0].il_gmm_usd[0] + rb.totals[0].il_gmm_usd[0]);
    }

    #[test]
    fn exclusions_are_counted() {
        let recs = vec![
            rec("A", 1, Some(4000), Some(1)),
            rec("A", 2, Some(3000), Some(1)),
            rec("B", 1, None, Some(1)),
            rec("B", 2, None, Some(1)),
            rec("C", 1, Some(4000), Some(1)),
            rec("D", 1, Some(4000), Some(0)),
            rec("D", 2, Some(4000), Some(1)),
        ];
        let rep = il_portfolio_report(&recs, &opts()).unwrap();
        assert_eq!(rep.included_pairs + rep.excluded_pairs, 4);
        assert_eq!(rep.included_pairs, 1);
        assert!(il_portfolio_report(&recs, &ILOptions { alphas: vec![0.7], ..opts() }).is_err());
    }
}
