use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adversary::{sandwich_profit_beta, sandwich_profit_cpmm_closed, sandwich_profit_nsplit};
use crate::num::{exact_to_decimal_min, Exact, Scalar};

use super::log::{attack_groups, validate_attacks, ParseOptions};
use super::{ReplayError, ReplayRecord, Role, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioAlgorithm {
    #[serde(alias = "CPMM")]
    Cpmm,
    #[serde(alias = "GMM")]
    Gmm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Rational,
    Float64,
}

/// Counterfactual scenario. GMM scenarios set exactly one of
/// `external_reserve_multiple` (other pools hold `beta` times the logged
/// pool) and `split_count` (the logged pool is split into `n` equal pools).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub algorithm: ScenarioAlgorithm,
    #[serde(default)]
    pub external_reserve_multiple: Option<f64>,
    #[serde(default)]
    pub split_count: Option<u32>,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    Cpmm,
    Beta(Exact),
    Split(u32),
}

impl ScenarioConfig {
    pub fn cpmm() -> Self {
        ScenarioConfig {
            algorithm: ScenarioAlgorithm::Cpmm,
            external_reserve_multiple: None,
            split_count: None,
            arithmetic: Arithmetic::Rational,
            seed: 0,
        }
    }

    pub fn beta(beta: f64) -> Self {
        ScenarioConfig {
            algorithm: ScenarioAlgorithm::Gmm,
            external_reserve_multiple: Some(beta),
            ..Self::cpmm()
        }
    }

    pub fn split(n: u32) -> Self {
        ScenarioConfig {
            algorithm: ScenarioAlgorithm::Gmm,
            split_count: Some(n),
            ..Self::cpmm()
        }
    }

    pub fn from_json(s: &str) -> Result<Self, ReplayError> {
        let cfg: ScenarioConfig = serde_json::from_str(s).map_err(|e| ReplayError::Config(e.to_string()))?;
        cfg.mode()?;
        Ok(cfg)
    }

    fn mode(&self) -> Result<Mode, ReplayError> {
        let bad = |m: &str| Err(ReplayError::Config(m.to_string()));
        match (self.algorithm, self.external_reserve_multiple, self.split_count) {
            (ScenarioAlgorithm::Cpmm, None, None) => Ok(Mode::Cpmm),
            (ScenarioAlgorithm::Cpmm, _, _) => bad("cpmm scenarios take neither external_reserve_multiple nor split_count"),
            (ScenarioAlgorithm::Gmm, Some(_), Some(_)) | (ScenarioAlgorithm::Gmm, None, None) => {
                bad("gmm scenarios need exactly one of external_reserve_multiple and split_count")
            }
            (ScenarioAlgorithm::Gmm, Some(b), None) => {
                if !(b >= 0.0 && b.is_finite()) {
                    return bad("external_reserve_multiple must be a finite number >= 0");
                }
                // shortest decimal form, so 0.1 means one tenth
                let exact = Exact::parse_decimal(&b.to_string()).unwrap_or_else(|| Exact::from_f64(b));
                Ok(Mode::Beta(exact))
            }
            (ScenarioAlgorithm::Gmm, None, Some(n)) => {
                if n == 0 {
                    return bad("split_count must be at least 1");
                }
                Ok(Mode::Split(n))
            }
        }
    }
}

/// Counterfactual result for one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub attack_id: String,
    pub pair_id: String,
    pub block_number: u64,
    pub tx_index: u64,
    /// Asset the front-run and victims send; profits are in this asset.
    pub token_in: Token,
    pub victims: usize,
    pub attack_dx: Exact,
    pub victim_dx: Exact,
    pub reserve_in: Exact,
    pub profit_native: Exact,
    pub profit_usd: Option<Exact>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub pair_id: String,
    pub attacks: usize,
    pub negative_profit_count: usize,
    /// Summed profit of attacks sending X, in X.
    pub profit_native_x: String,
    /// Summed profit of attacks sending Y, in Y.
    pub profit_native_y: String,
    pub profit_usd: Option<f64>,
    /// Set when some attack of the pair has no USD price for its asset.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub scenario: ScenarioConfig,
    pub total_attacker_profit_usd: f64,
    /// Same total as a decimal string (exact up to 18 places).
    pub total_attacker_profit_usd_decimal: String,
    /// Attacks counted in the USD total.
    pub attack_count: usize,
    pub negative_profit_count: usize,
    pub pct_negative_profit: f64,
    /// Every attack in the log, including those of excluded pairs.
    pub attacks_total: usize,
    pub included_pairs: usize,
    pub excluded_pairs: usize,
    pub excluded_pair_ids: Vec<String>,
    pub per_pair: Vec<PairSummary>,
    #[serde(skip)]
    pub total_usd_exact: Exact,
}

/// Re-prices every attack under `config`, sorted by pair, block and index.
pub fn attack_outcomes(records: &[ReplayRecord], config: &ScenarioConfig) -> Result<Vec<AttackOutcome>, ReplayError> {
    let mode = config.mode()?;
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.pair_id.cmp(&b.pair_id)));
    validate_attacks(&sorted, ParseOptions::default())?;
    let mut out = Vec::new();
    for (id, group) in attack_groups(&sorted) {
        let front = group[0];
        let victims: Vec<_> = group.iter().filter(|r| r.role == Role::Victim).collect();
        let victim_dx = victims.iter().fold(Exact::from_int(0), |acc, v| acc + v.amount_in.clone());
        let profit_native = match config.arithmetic {
            Arithmetic::Rational => profit::<Exact>(&mode, front.reserve_in(), &victim_dx, &front.amount_in)?,
            Arithmetic::Float64 => profit::<f64>(&mode, front.reserve_in(), &victim_dx, &front.amount_in)?.to_exact(),
        };
        let profit_usd = front.price_usd(front.token_in).map(|p| profit_native.clone() * p.clone());
        out.push(AttackOutcome {
            attack_id: id.to_string(),
            pair_id: front.pair_id.clone(),
            block_number: front.block_number,
            tx_index: front.tx_index,
            token_in: front.token_in,
            victims: victims.len(),
            attack_dx: front.amount_in.clone(),
            victim_dx,
            reserve_in: front.reserve_in().clone(),
            profit_native,
            profit_usd,
        });
    }
    out.sort_by(|a, b| {
        (a.pair_id.as_str(), a.block_number, a.tx_index, a.attack_id.as_str()).cmp(&(
            b.pair_id.as_str(),
            b.block_number,
            b.tx_index,
            b.attack_id.as_str(),
        ))
    });
    Ok(out)
}

fn profit<T: Scalar>(mode: &Mode, reserve: &Exact, victim: &Exact, attack: &Exact) -> Result<T, ReplayError> {
    let conv = |q: &Exact| T::from_exact(q);
    let (x, v, a) = (conv(reserve), conv(victim), conv(attack));
    Ok(match mode {
        Mode::Cpmm => sandwich_profit_cpmm_closed(&x, &v, &a)?,
        Mode::Beta(b) => sandwich_profit_beta(&x, &conv(b), &v, &a)?,
        Mode::Split(n) => sandwich_profit_nsplit(&x, *n, &v, &a)?,
    })
}

/// Runs the scenario over a validated log. The result does not depend on
/// the order of `records`.
pub fn run_counterfactual(records: &[ReplayRecord], config: &ScenarioConfig) -> Result<ReplaySummary, ReplayError> {
    let outcomes = attack_outcomes(records, config)?;
    let zero = || Exact::from_int(0);
    let all_pairs: BTreeSet<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    let mut by_pair: BTreeMap<&str, Vec<&AttackOutcome>> = all_pairs.iter().map(|p| (*p, Vec::new())).collect();
    for o in &outcomes {
        by_pair.entry(o.pair_id.as_str()).or_default().push(o);
    }

    let mut total = zero();
    let (mut attack_count, mut negative_total) = (0, 0);
    let mut per_pair = Vec::new();
    let mut excluded_pair_ids = Vec::new();
    for (pair, attacks) in &by_pair {
        let (mut px, mut py) = (zero(), zero());
        let mut usd = zero();
        let mut excluded = false;
        let mut negative = 0;
        for o in attacks {
            match o.token_in {
                Token::X => px += o.profit_native.clone(),
                Token::Y => py += o.profit_native.clone(),
            }
            if o.profit_native.is_negative() {
                negative += 1;
            }
            match &o.profit_usd {
                Some(p) => usd += p.clone(),
                None => excluded = true,
            }
        }
        if excluded {
            excluded_pair_ids.push(pair.to_string());
        } else {
            total += usd.clone();
            attack_count += attacks.len();
            negative_total += negative;
        }
        per_pair.push(PairSummary {
            pair_id: pair.to_string(),
            attacks: attacks.len(),
            negative_profit_count: negative,
            profit_native_x: exact_to_decimal_min(&px, 18),
            profit_native_y: exact_to_decimal_min(&py, 18),
            profit_usd: (!excluded).then(|| usd.to_f64()),
            excluded,
        });
    }
    Ok(ReplaySummary {
        scenario: config.clone(),
        total_attacker_profit_usd: total.to_f64(),
        total_attacker_profit_usd_decimal: exact_to_decimal_min(&total, 18),
        attack_count,
        negative_profit_count: negative_total,
        pct_negative_profit: if attack_count == 0 {
            0.0
        } else {
            negative_total as f64 / attack_count as f64
        },
        attacks_total: outcomes.len(),
        included_pairs: by_pair.len() - excluded_pair_ids.len(),
        excluded_pairs: excluded_pair_ids.len(),
        excluded_pair_ids,
        per_pair,
        total_usd_exact: total,
    })
}

/// One row per attack: sizes, snapshot reserve and profits.
pub fn write_attacks_csv(outcomes: &[AttackOutcome], sink: impl Write) -> Result<(), ReplayError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "attack_id",
        "pair_id",
        "block_number",
        "tx_index",
        "token_in",
        "victims",
        "attack_dx",
        "victim_dx",
        "reserve_in",
        "profit_native",
        "profit_usd",
    ])?;
    let dec = |q: &Exact| exact_to_decimal_min(q, 18);
    for o in outcomes {
        w.write_record([
            o.attack_id.clone(),
            o.pair_id.clone(),
            o.block_number.to_string(),
            o.tx_index.to_string(),
            o.token_in.to_string(),
            o.victims.to_string(),
            dec(&o.attack_dx),
            dec(&o.victim_dx),
            dec(&o.reserve_in),
            dec(&o.profit_native),
            o.profit_usd.as_ref().map(dec).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::parse_log;

    const TOY: &str = "\
block_number,tx_index,pair_id,role,attack_id,token_in,amount_in,reserve_x_before,reserve_y_before,price_usd_x,price_usd_y
7,0,ETH-UST,frontrun,a1,Y,60000,100,400000,4000,1
7,1,ETH-UST,victim,a1,Y,40000,86.9565,460000,4000,1
7,2,ETH-UST,backrun,a1,X,13.0435,79.9999,500000,4000,1
";

    fn toy() -> Vec<ReplayRecord> {
        parse_log(TOY.as_bytes()).unwrap()
    }

    #[test]
    fn toy_cpmm_and_gmm() {
        let s = run_counterfactual(&toy(), &ScenarioConfig::cpmm()).unwrap();
        assert!((s.total_attacker_profit_usd - 10_093.457_943_925).abs() < 1e-6);
        assert_eq!(s.attack_count, 1);
        assert_eq!(s.pct_negative_profit, 0.0);
        let g = run_counterfactual(&toy(), &ScenarioConfig::beta(1.0)).unwrap();
        assert!((g.total_attacker_profit_usd - 810.810_810_81).abs() < 1e-6);
        let n = run_counterfactual(&toy(), &ScenarioConfig::split(2)).unwrap();
        assert_eq!(n.total_usd_exact, g.total_usd_exact);
    }

    #[test]
    fn reductions_to_cpmm() {
        let c = run_counterfactual(&toy(), &ScenarioConfig::cpmm()).unwrap();
        let b = run_counterfactual(&toy(), &ScenarioConfig::beta(0.0)).unwrap();
        let n = run_counterfactual(&toy(), &ScenarioConfig::split(1)).unwrap();
        assert_eq!(c.total_usd_exact, b.total_usd_exact);
        assert_eq!(c.total_usd_exact, n.total_usd_exact);
    }

    #[test]
    fn float_path_agrees() {
        let mut cfg = ScenarioConfig::beta(0.5);
        let exact = run_counterfactual(&toy(), &cfg).unwrap();
        cfg.arithmetic = Arithmetic::Float64;
        let float = run_counterfactual(&toy(), &cfg).unwrap();
        let rel = (exact.total_attacker_profit_usd - float.total_attacker_profit_usd).abs() / exact.total_attacker_profit_usd;
        assert!(rel < 1e-9);
    }

    #[test]
    fn missing_price_excludes_pair() {
        let recs: Vec<_> = toy()
            .into_iter()
            .map(|mut r| {
                r.price_usd_y = None;
                r
            })
            .collect();
        let s = run_counterfactual(&recs, &ScenarioConfig::cpmm()).unwrap();
        assert_eq!((s.included_pairs, s.excluded_pairs), (0, 1));
        assert_eq!(s.attack_count, 0);
        assert_eq!(s.attacks_total, 1);
        assert_eq!(s.per_pair[0].profit_native_y, exact_to_decimal_min(&s_profit(), 18));
    }

    fn s_profit() -> Exact {
        sandwich_profit_cpmm_closed(&Exact::from_int(400_000), &Exact::from_int(40_000), &Exact::from_int(60_000)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"gmm","external_reserve_multiple":1,"seed":3}"#).is_ok());
        let cfg = ScenarioConfig::from_json(r#"{"algorithm":"GMM","split_count":4,"arithmetic":"float64"}"#).unwrap();
        assert_eq!(cfg.arithmetic, Arithmetic::Float64);
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"gmm"}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"gmm","split_count":2,"external_reserve_multiple":1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"cpmm","split_count":2}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"gmm","split_count":0}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"gmm","external_reserve_multiple":-1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"algorithm":"cpmm","colour":1}"#).is_err());
    }

    #[test]
    fn attacks_csv() {
        let outcomes = attack_outcomes(&toy(), &ScenarioConfig::cpmm()).unwrap();
        let mut buf = Vec::new();
        write_attacks_csv(&outcomes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("a1,ETH-UST,7,0,Y,1,60000,40000,400000,10093.457943925233644859,"));
    }
}
