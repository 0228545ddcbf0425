use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::num::{exact_to_decimal_min, Exact, Scalar};
use crate::pricing::cpmm_out;

use super::{ReplayError, ReplayRecord, Role, Token};

pub const LOG_HEADER: &str = "block_number,tx_index,pair_id,role,attack_id,token_in,amount_in,reserve_x_before,reserve_y_before,price_usd_x,price_usd_y";

const FIELDS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Relative tolerance between a back-run's input and the output its
    /// front-run would have received. Logged decimals are rounded, so exact
    /// equality is too strict.
    pub backrun_tolerance: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            backrun_tolerance: 1e-4,
        }
    }
}

/// Parses and validates a swap log with default options.
pub fn parse_log(source: impl Read) -> Result<Vec<ReplayRecord>, ReplayError> {
    parse_log_with(source, ParseOptions::default())
}

pub fn parse_log_with(source: impl Read, opts: ParseOptions) -> Result<Vec<ReplayRecord>, ReplayError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != LOG_HEADER {
        return Err(ReplayError::Header {
            expected: LOG_HEADER.to_string(),
            found: header,
        });
    }
    let mut records = Vec::new();
    let mut last_key = None;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let rec = parse_row(&row, line)?;
        if last_key.is_some_and(|k| rec.sort_key() <= k) {
            return Err(ReplayError::Unsorted { line });
        }
        last_key = Some(rec.sort_key());
        records.push(rec);
    }
    validate_attacks(&records, opts)?;
    Ok(records)
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<ReplayRecord, ReplayError> {
    let err = |message: String| ReplayError::Row { line, message };
    if row.len() != FIELDS {
        return Err(err(format!("expected {FIELDS} fields, found {}", row.len())));
    }
    let int = |i: usize, name: &str| -> Result<u64, ReplayError> {
        row[i]
            .trim()
            .parse::<u64>()
            .map_err(|_| err(format!("{name} is not a nonnegative integer: `{}`", &row[i])))
    };
    let dec = |i: usize, name: &str| -> Result<Exact, ReplayError> {
        let v = Exact::parse_decimal(&row[i]).ok_or_else(|| err(format!("{name} is not a decimal: `{}`", &row[i])))?;
        if v.is_negative() {
            return Err(err(format!("{name} must be nonnegative")));
        }
        Ok(v)
    };
    let opt_dec = |i: usize, name: &str| -> Result<Option<Exact>, ReplayError> {
        if row[i].trim().is_empty() {
            Ok(None)
        } else {
            dec(i, name).map(Some)
        }
    };
    let role = Role::parse(row[3].trim()).ok_or_else(|| err(format!("unknown role `{}`", &row[3])))?;
    let token_in = match row[5].trim() {
        "X" => Token::X,
        "Y" => Token::Y,
        other => return Err(err(format!("token_in must be X or Y, found `{other}`"))),
    };
    let pair_id = row[2].trim().to_string();
    if pair_id.is_empty() {
        return Err(err("empty pair_id".into()));
    }
    let attack_id = row[4].trim().to_string();
    match (role, attack_id.is_empty()) {
        (Role::Normal, false) => return Err(err("normal swap carries an attack_id".into())),
        (Role::Frontrun | Role::Victim | Role::Backrun, true) => {
            return Err(err(format!("{role} swap without attack_id")))
        }
        _ => {}
    }
    let rec = ReplayRecord {
        block_number: int(0, "block_number")?,
        tx_index: int(1, "tx_index")?,
        pair_id,
        role,
        attack_id,
        token_in,
        amount_in: dec(6, "amount_in")?,
        reserve_x_before: dec(7, "reserve_x_before")?,
        reserve_y_before: dec(8, "reserve_y_before")?,
        price_usd_x: opt_dec(9, "price_usd_x")?,
        price_usd_y: opt_dec(10, "price_usd_y")?,
    };
    if !rec.reserve_x_before.is_positive() || !rec.reserve_y_before.is_positive() {
        return Err(err("reserves must be positive".into()));
    }
    Ok(rec)
}

/// Groups the records of each attack in log order.
pub(super) fn attack_groups(records: &[ReplayRecord]) -> BTreeMap<&str, Vec<&ReplayRecord>> {
    let mut groups: BTreeMap<&str, Vec<&ReplayRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.role != Role::Normal) {
        groups.entry(r.attack_id.as_str()).or_default().push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.sort_key());
    }
    groups
}

/// Checks every attack bracket: one front-run first, one back-run last,
/// victims in between, a single pair, victims sending the front-run's asset,
/// and a back-run returning the front-run's output.
pub(super) fn validate_attacks(records: &[ReplayRecord], opts: ParseOptions) -> Result<(), ReplayError> {
    for (id, group) in attack_groups(records) {
        let fail = |message: String| ReplayError::Attack {
            attack_id: id.to_string(),
            message,
        };
        let count = |role| group.iter().filter(|r| r.role == role).count();
        let (fronts, backs) = (count(Role::Frontrun), count(Role::Backrun));
        if fronts != 1 || backs != 1 {
            return Err(fail(format!("expected one frontrun and one backrun, found {fronts} and {backs}")));
        }
        let front = group[0];
        let back = group[group.len() - 1];
        if front.role != Role::Frontrun || back.role != Role::Backrun {
            return Err(fail("victims must sit between the frontrun and the backrun".into()));
        }
        if group.iter().any(|r| r.pair_id != front.pair_id) {
            return Err(fail("records span more than one pair".into()));
        }
        if group[1..group.len() - 1].iter().any(|v| v.token_in != front.token_in) {
            return Err(fail("victims must send the same asset as the frontrun".into()));
        }
        if back.token_in != front.token_in.other() {
            return Err(fail("backrun must send the asset the frontrun received".into()));
        }
        let expected = cpmm_out(&front.amount_in, front.reserve_in(), front.reserve_out())?;
        let gap = (back.amount_in.clone() - expected.clone()).abs_val();
        if gap.to_f64() > opts.backrun_tolerance * expected.to_f64() {
            return Err(fail(format!(
                "backrun input {} differs from the frontrun output {:.6}",
                exact_to_decimal_min(&back.amount_in, 18),
                expected.to_f64()
            )));
        }
    }
    Ok(())
}

/// Writes records in the log format. Decimals are written exactly when they
/// have a finite expansion of at most 18 places.
pub fn write_log(records: &[ReplayRecord], sink: impl Write) -> Result<(), ReplayError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(LOG_HEADER.split(','))?;
    let dec = |q: &Exact| exact_to_decimal_min(q, 18);
    let opt = |q: &Option<Exact>| q.as_ref().map(dec).unwrap_or_default();
    for r in records {
        w.write_record([
            r.block_number.to_string(),
            r.tx_index.to_string(),
            r.pair_id.clone(),
            r.role.to_string(),
            r.attack_id.clone(),
            r.token_in.to_string(),
            dec(&r.amount_in),
            dec(&r.reserve_x_before),
            dec(&r.reserve_y_before),
            opt(&r.price_usd_x),
            opt(&r.price_usd_y),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
