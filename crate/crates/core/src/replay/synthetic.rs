use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::num::{Exact, Scalar};
use crate::pricing::cpmm_out;

use super::{ReplayRecord, Role, Token};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub attacks: usize,
    pub pairs: usize,
    /// The last `unpriced_pairs` pairs carry no USD prices.
    pub unpriced_pairs: usize,
    pub max_victims: usize,
    pub seed: u64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            attacks: 100,
            pairs: 6,
            unpriced_pairs: 1,
            max_victims: 3,
            seed: 42,
        }
    }
}

/// Keeps six decimals, rounding down, so logged values stay exact decimals.
fn round6(q: &Exact) -> Exact {
    let scale = Exact::from_int(1_000_000);
    (q.clone() * scale.clone()).floor() / scale
}

fn decimal(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Exact {
    Exact::from_ratio(rng.gen_range(lo * 1000..hi * 1000), 1000)
}

struct PairState {
    id: String,
    x: Exact,
    y: Exact,
    usd: Option<(Exact, Exact)>,
}

impl PairState {
    fn record(&self, block: u64, tx: u64, role: Role, attack: &str, token: Token, amount: Exact) -> ReplayRecord {
        ReplayRecord {
            block_number: block,
            tx_index: tx,
            pair_id: self.id.clone(),
            role,
            attack_id: attack.to_string(),
            token_in: token,
            amount_in: amount,
            reserve_x_before: self.x.clone(),
            reserve_y_before: self.y.clone(),
            price_usd_x: self.usd.as_ref().map(|p| p.0.clone()),
            price_usd_y: self.usd.as_ref().map(|p| p.1.clone()),
        }
    }

    /// Constant-product swap with the output rounded down to six decimals.
    fn swap(&mut self, token: Token, amount: &Exact) -> Exact {
        let (r_in, r_out) = match token {
            Token::X => (&self.x, &self.y),
            Token::Y => (&self.y, &self.x),
        };
        let out = round6(&cpmm_out(amount, r_in, r_out).expect("positive reserves"));
        match token {
            Token::X => {
                self.x = self.x.clone() + amount.clone();
                self.y = self.y.clone() - out.clone();
            }
            Token::Y => {
                self.y = self.y.clone() + amount.clone();
                self.x = self.x.clone() - out.clone();
            }
        }
        out
    }
}

/// Seeded log of sandwich attacks interleaved with ordinary swaps. Every
/// decimal has at most six places, so the log round-trips exactly.
pub fn synthetic_fixture(opts: &SyntheticOptions) -> Vec<ReplayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_pairs = opts.pairs.max(1);
    let mut pairs: Vec<PairState> = (0..n_pairs)
        .map(|i| {
            let x = decimal(&mut rng, 100, 10_000);
            let ratio = decimal(&mut rng, 1, 5_000);
            let usd = (i + opts.unpriced_pairs < n_pairs).then(|| {
                let py = decimal(&mut rng, 1, 3);
                (round6(&(ratio.clone() * py.clone())), py)
            });
            PairState {
                id: format!("P{i:02}"),
                y: round6(&(x.clone() * ratio)),
                x,
                usd,
            }
        })
        .collect();

    let mut out = Vec::new();
    let mut block = 1_000u64;
    for a in 0..opts.attacks {
        block += rng.gen_range(1..4);
        let p = rng.gen_range(0..n_pairs);
        let mut tx = 0u64;
        if rng.gen_bool(0.3) {
            let token = if rng.gen_bool(0.5) { Token::X } else { Token::Y };
            let pair = &mut pairs[p];
            let reserve = match token {
                Token::X => &pair.x,
                Token::Y => &pair.y,
            };
            let amount = round6(&(reserve.clone() * Exact::from_ratio(rng.gen_range(1..50), 1000)));
            out.push(pair.record(block, tx, Role::Normal, "", token, amount.clone()));
            pair.swap(token, &amount);
            tx += 1;
        }
        let id = format!("A{a:04}");
        let token = if rng.gen_bool(0.5) { Token::X } else { Token::Y };
        let pair = &mut pairs[p];
        let reserve_in = match token {
            Token::X => pair.x.clone(),
            Token::Y => pair.y.clone(),
        };
        let frac = |rng: &mut ChaCha8Rng| Exact::from_ratio(rng.gen_range(1..200), 1000);
        let attack = round6(&(reserve_in.clone() * frac(&mut rng)));
        out.push(pair.record(block, tx, Role::Frontrun, &id, token, attack.clone()));
        let front_out = pair.swap(token, &attack);
        tx += 1;
        for _ in 0..rng.gen_range(0..=opts.max_victims) {
            let v = round6(&(reserve_in.clone() * frac(&mut rng)));
            out.push(pair.record(block, tx, Role::Victim, &id, token, v.clone()));
            pair.swap(token, &v);
            tx += 1;
        }
        out.push(pair.record(block, tx, Role::Backrun, &id, token.other(), front_out.clone()));
        pair.swap(token.other(), &front_out);
        if let Some((px, py)) = pair.usd.as_mut() {
            // mild price drift between attacks
            let drift = Exact::from_ratio(rng.gen_range(950..1050), 1000);
            *px = round6(&(px.clone() * drift));
            if !px.is_positive() {
                *px = py.clone();
            }
        }
    }
    out
}
