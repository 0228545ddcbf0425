//! Parameter sweeps behind the MEV-profit and impermanent-loss curves.

use std::io::Write;
use std::str::FromStr;

use crate::adversary::{sandwich_profit_cpmm_closed, sandwich_profit_gmm_closed};
use crate::analytics::{il_cpmm, il_gmm_small_pool};
use crate::error::{AmmError, Result};
use crate::num::{Exact, Scalar};
use crate::pricing::Algorithm;

/// Inclusive grid `start, start + step, ...` up to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        let finite = start.is_finite() && end.is_finite() && step.is_finite();
        if !finite || step <= 0.0 || end < start {
            return Err(AmmError::domain(format!("empty range {start}:{end}:{step}")));
        }
        Ok(SweepRange { start, end, step })
    }

    pub fn single(v: f64) -> Result<Self> {
        Self::new(v, v, 1.0)
    }

    pub fn points(&self) -> Vec<f64> {
        // index-based so long grids do not drift
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for SweepRange {
    type Err = AmmError;

    /// Parses `start:end:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| AmmError::domain(format!("range must be start:end:step, got `{s}`")))?;
        match parts[..] {
            [a, b, step] => SweepRange::new(a, b, step),
            _ => Err(AmmError::domain(format!("range must be start:end:step, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MevParams {
    pub x_i: f64,
    pub victim_dx: f64,
    /// Aggregate reserve of the sent asset; GMM only.
    pub x_global: Option<f64>,
    pub algorithm: Algorithm,
}

/// Sandwich profit against front-run size, from the closed forms evaluated
/// exactly.
type ProfitFn<'a> = Box<dyn Fn(&Exact) -> Result<Exact> + 'a>;

pub fn mev_curve(params: &MevParams, range: &SweepRange) -> Result<Vec<(f64, f64)>> {
    let xi = Exact::from_f64(params.x_i);
    let v = Exact::from_f64(params.victim_dx);
    let profit: ProfitFn = match params.algorithm {
        Algorithm::Cpmm => Box::new(|a| sandwich_profit_cpmm_closed(&xi, &v, a)),
        Algorithm::Gmm => {
            let x = params
                .x_global
                .ok_or_else(|| AmmError::domain("the GMM curve needs the aggregate reserve"))?;
            let x = Exact::from_f64(x);
            Box::new(move |a| sandwich_profit_gmm_closed(&xi, &x, &v, a))
        }
        other => return Err(AmmError::UnsupportedAlgorithm(other.name())),
    };
    range
        .points()
        .into_iter()
        .map(|a| Ok((a, profit(&Exact::from_f64(a))?.to_f64())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlRow {
    /// Final over initial price.
    pub ratio: f64,
    pub il_cpmm: f64,
    /// One value per alpha, in the order given.
    pub il_gmm: Vec<f64>,
}

pub fn il_curve(range: &SweepRange, alphas: &[f64]) -> Result<Vec<IlRow>> {
    range
        .points()
        .into_iter()
        .map(|ratio| {
            Ok(IlRow {
                ratio,
                il_cpmm: il_cpmm(1.0, ratio)?,
                il_gmm: alphas
                    .iter()
                    .map(|&a| il_gmm_small_pool(1.0, ratio, a))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn write_mev_csv(rows: &[(f64, f64)], sink: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["attack_dx", "profit"])?;
    for (a, p) in rows {
        w.write_record([a.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_il_csv(rows: &[IlRow], alphas: &[f64], sink: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["ratio".to_string(), "il_cpmm".to_string()];
    header.extend(alphas.iter().map(|a| format!("il_gmm_alpha_{a}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.ratio.to_string(), r.il_cpmm.to_string()];
        rec.extend(r.il_gmm.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(rows: &[(f64, f64)], a: f64) -> f64 {
        rows.iter().find(|r| r.0 == a).unwrap().1
    }

    #[test]
    fn range_parsing() {
        let r: SweepRange = "0:200000:1000".parse().unwrap();
        assert_eq!(r.points().len(), 201);
        assert_eq!(r.points()[60], 60_000.0);
        assert_eq!("0.5:1.0:0.1".parse::<SweepRange>().unwrap().points().len(), 6);
        for bad in ["5:1:1", "0:1:0", "0:1", "a:b:c", "0:1:-1"] {
            assert!(bad.parse::<SweepRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn mev_curves_hit_toy_values() {
        let range: SweepRange = "0:200000:1000".parse().unwrap();
        let mut p = MevParams {
            x_i: 400_000.0,
            victim_dx: 40_000.0,
            x_global: None,
            algorithm: Algorithm::Cpmm,
        };
        let cp = mev_curve(&p, &range).unwrap();
        assert!((at(&cp, 60_000.0) - 10_093.457943925234).abs() < 1e-6);
        assert_eq!(at(&cp, 0.0), 0.0);
        p.algorithm = Algorithm::Gmm;
        assert!(mev_curve(&p, &range).is_err());
        p.x_global = Some(800_000.0);
        let g = mev_curve(&p, &range).unwrap();
        assert!((at(&g, 60_000.0) - 810.8108108108).abs() < 1e-6);
        p.algorithm = Algorithm::Ngmm;
        assert!(mev_curve(&p, &range).is_err());
    }

    #[test]
    fn il_is_zero_without_a_move() {
        let alphas = [0.01, 0.1, 0.5];
        let rows = il_curve(&SweepRange::single(1.0).unwrap(), &alphas).unwrap();
        assert_eq!(rows[0].il_cpmm, 0.0);
        assert!(rows[0].il_gmm.iter().all(|v| v.abs() < 1e-15));
        let mut buf = Vec::new();
        write_il_csv(&rows, &alphas, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ratio,il_cpmm,il_gmm_alpha_0.01,il_gmm_alpha_0.1,il_gmm_alpha_0.5\n1,0,"));
    }
}
