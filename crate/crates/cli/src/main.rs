//! `globalmm`: quoting, figure sweeps, the toy regression and log replay.
//!
//! Exit codes: 0 on success, 1 on a domain or validation error (or a failed
//! toy check), 2 on a usage error. `GLOBALMM_LOG` sets log verbosity.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use globalmm::num::{display_fixed, exact_to_decimal_string};
use globalmm::rebalance::gmm_rebal_quote_sided;
use globalmm::replay::{
    attack_outcomes, il_portfolio_report, parse_log, run_counterfactual, synthetic_fixture, write_attacks_csv,
    write_log, ILOptions, ScenarioConfig, SyntheticOptions,
};
use globalmm::sweep::{il_curve, mev_curve, write_il_csv, write_mev_csv, MevParams, SweepRange};
use globalmm::toy;
use globalmm::{quote, Algorithm, Ecosystem, Exact, PoolId, Scalar, Side, SwapOrder};

#[derive(Parser)]
#[command(name = "globalmm", version, about = "Global market maker simulation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quote one order against an ecosystem
    Quote(QuoteArgs),
    /// Write curve data as CSV
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Run the toy-scenario regression
    Toy(ToyArgs),
    /// Re-price a logged set of sandwich attacks under a scenario
    Replay(ReplayArgs),
    /// Write a seeded synthetic attack log
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Cpmm,
    Ngmm,
    Gmm,
    GmmRebal,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Cpmm => Algorithm::Cpmm,
            AlgArg::Ngmm => Algorithm::Ngmm,
            AlgArg::Gmm => Algorithm::Gmm,
            AlgArg::GmmRebal => Algorithm::GmmRebal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    X,
    Y,
}

#[derive(Clone, Debug)]
struct Pools(Vec<(Exact, Exact)>);

fn parse_pools(s: &str) -> Result<Pools, String> {
    let decimal = |v: &str| match Exact::parse_decimal(v.trim()) {
        Some(q) if q.is_positive() => Ok(q),
        _ => Err(format!("`{v}` is not a positive decimal")),
    };
    s.split(',')
        .map(|p| match p.split_once(':') {
            Some((x, y)) => Ok((decimal(x)?, decimal(y)?)),
            None => Err(format!("pool `{p}` is not x:y")),
        })
        .collect::<Result<_, _>>()
        .map(Pools)
}

fn parse_amount(s: &str) -> Result<Exact, String> {
    match Exact::parse_decimal(s.trim()) {
        Some(q) if !q.is_negative() => Ok(q),
        _ => Err(format!("`{s}` is not a nonnegative decimal")),
    }
}

fn parse_range(s: &str) -> Result<SweepRange, String> {
    s.parse().map_err(|e: globalmm::AmmError| e.to_string())
}

#[derive(Args)]
struct QuoteArgs {
    /// Reserves as x1:y1,x2:y2,...
    #[arg(long, value_parser = parse_pools)]
    pools: Pools,
    /// Asset the order sends
    #[arg(long, value_enum, ignore_case = true)]
    send: SideArg,
    #[arg(long, value_parser = parse_amount)]
    amount: Exact,
    #[arg(long, default_value_t = 0)]
    pool_index: u32,
    #[arg(long, value_enum, default_value = "gmm")]
    algorithm: AlgArg,
    /// Rebalance even when the trigger conditions fail (gmm-rebal only)
    #[arg(long)]
    force_trigger: bool,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Sandwich profit against front-run size
    Mev(MevArgs),
    /// Impermanent loss against the final/initial price ratio
    Il(IlArgs),
}

#[derive(Args)]
struct MevArgs {
    /// Pool reserve of the asset the victim sends
    #[arg(long)]
    xi: f64,
    #[arg(long)]
    victim: f64,
    /// Front-run sizes as start:end:step
    #[arg(long, value_parser = parse_range)]
    range: SweepRange,
    #[arg(long, value_enum, default_value = "cpmm")]
    algorithm: AlgArg,
    /// Aggregate reserve across pools (gmm)
    #[arg(long)]
    x: Option<f64>,
    /// Output CSV; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IlArgs {
    /// Small-pool shares, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.25, 0.5])]
    alpha: Vec<f64>,
    /// Price ratios as start:end:step
    #[arg(long, value_parser = parse_range, conflicts_with = "ratio", required_unless_present = "ratio")]
    range: Option<SweepRange>,
    /// A single price ratio
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ToyArgs {
    /// Part to run; all parts when absent
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    part: Option<u8>,
    /// Override the part's algorithm (part 5 only)
    #[arg(long, value_enum, requires = "part")]
    algorithm: Option<AlgArg>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Scenario JSON
    #[arg(long, required_unless_present = "il")]
    config: Option<PathBuf>,
    /// Summary JSON
    #[arg(long)]
    out: PathBuf,
    /// Produce the impermanent-loss report instead of attack profits
    #[arg(long)]
    il: bool,
    #[arg(long, value_delimiter = ',', requires = "il")]
    alphas: Option<Vec<f64>>,
    #[arg(long, requires = "il")]
    lambda: Option<f64>,
    /// Per-attack CSV
    #[arg(long, conflicts_with = "il")]
    attacks_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    attacks: usize,
    #[arg(long, default_value_t = 6)]
    pairs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Error carrying a usage failure found after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GLOBALMM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Quote(a) => cmd_quote(a),
        Command::Sweep(s) => cmd_sweep(s),
        Command::Toy(a) => cmd_toy(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn cmd_quote(a: QuoteArgs) -> anyhow::Result<ExitCode> {
    let eco = Ecosystem::from_reserves(a.pools.0)?;
    let alg = Algorithm::from(a.algorithm);
    if a.force_trigger && alg != Algorithm::GmmRebal {
        return Err(Usage("--force-trigger applies to gmm-rebal only".into()).into());
    }
    let side = match a.send {
        SideArg::X => Side::SendX,
        SideArg::Y => Side::SendY,
    };
    let pool = PoolId(a.pool_index);
    if eco.pool(pool).is_err() {
        let msg = format!("--pool-index {} is out of range for {} pools", a.pool_index, eco.len());
        return Err(Usage(msg).into());
    }
    debug!("quoting {} into pool {} under {}", a.amount.to_f64(), a.pool_index, alg.name());
    let (out, branch, class, transfers) = if a.amount == Exact::from_int(0) {
        (Exact::from_int(0), None, None, Vec::new())
    } else if alg == Algorithm::GmmRebal {
        let rq = gmm_rebal_quote_sided(side, &a.amount, &eco, pool, a.force_trigger)?;
        let q = rq.quote;
        (q.amount_out, Some(q.branch), Some(q.classification), rq.transfers)
    } else {
        let q = quote(&eco, &SwapOrder::trader(pool, side, a.amount.clone()), alg)?;
        (q.amount_out, Some(q.branch), Some(q.classification), Vec::new())
    };
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "amount_out       {}", display_fixed(&out, 2))?;
    writeln!(stdout, "amount_out_exact {}", exact_to_decimal_string(&out, 12))?;
    if let (Some(b), Some(c)) = (branch, class) {
        writeln!(stdout, "branch           {b}")?;
        writeln!(stdout, "classification   {c}")?;
    }
    for t in transfers {
        writeln!(
            stdout,
            "transfer         {} from pool {} to pool {} for {}",
            display_fixed(&t.amount_x, 2),
            t.from_pool.0,
            t.to_pool.0,
            display_fixed(&t.amount_y_received, 2)
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_sweep(cmd: SweepCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        SweepCommand::Mev(a) => {
            let params = MevParams {
                x_i: a.xi,
                victim_dx: a.victim,
                x_global: a.x,
                algorithm: a.algorithm.into(),
            };
            let rows = mev_curve(&params, &a.range)?;
            info!("{} mev points", rows.len());
            write_mev_csv(&rows, output(a.out.as_deref())?)?;
        }
        SweepCommand::Il(a) => {
            let range = match (a.range, a.ratio) {
                (Some(r), _) => r,
                (None, Some(v)) => SweepRange::single(v)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let rows = il_curve(&range, &a.alpha)?;
            info!("{} il points", rows.len());
            write_il_csv(&rows, &a.alpha, output(a.out.as_deref())?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_toy(a: ToyArgs) -> anyhow::Result<ExitCode> {
    let reports = match a.part {
        Some(p) => vec![toy::run_part(p, a.algorithm.map(Algorithm::from))?],
        None => toy::run_all()?,
    };
    let mut stdout = io::stdout().lock();
    for r in &reports {
        write!(stdout, "{r}")?;
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).collect();
    if failed.is_empty() {
        writeln!(stdout, "all checks passed")?;
        return Ok(ExitCode::SUCCESS);
    }
    for r in failed {
        for c in r.failures() {
            eprintln!("part {}: {c}", r.part);
        }
    }
    Ok(ExitCode::from(1))
}

fn cmd_replay(a: ReplayArgs) -> anyhow::Result<ExitCode> {
    let file = File::open(&a.log).with_context(|| format!("opening {}", a.log.display()))?;
    let records = parse_log(file).with_context(|| format!("invalid log {}", a.log.display()))?;
    info!("{} records", records.len());
    let json = if a.il {
        let mut opts = ILOptions::default();
        if let Some(alphas) = a.alphas {
            opts.alphas = alphas;
        }
        if let Some(l) = a.lambda {
            opts.lambda = l;
        }
        let rep = il_portfolio_report(&records, &opts)?;
        println!(
            "pairs included {} excluded {}",
            rep.included_pairs, rep.excluded_pairs
        );
        for t in &rep.totals {
            println!(
                "{:<5} pairs {:>4}  hold value {:>16.2}  IL cpmm {:>14.2}",
                t.volatility, t.pairs, t.value_hold_usd, t.il_cpmm_usd
            );
        }
        serde_json::to_string_pretty(&rep)?
    } else {
        let path = a.config.as_ref().expect("clap requires --config without --il");
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config = ScenarioConfig::from_json(&text)?;
        let summary = run_counterfactual(&records, &config)?;
        if let Some(p) = &a.attacks_csv {
            let outcomes = attack_outcomes(&records, &config)?;
            write_attacks_csv(&outcomes, BufWriter::new(File::create(p)?))?;
        }
        println!(
            "attacks {}  negative {} ({:.2}%)  attacker profit USD {}",
            summary.attack_count,
            summary.negative_profit_count,
            summary.pct_negative_profit * 100.0,
            summary.total_attacker_profit_usd_decimal
        );
        serde_json::to_string_pretty(&summary)?
    };
    fs::write(&a.out, json + "\n").with_context(|| format!("writing {}", a.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<ExitCode> {
    if a.pairs == 0 {
        bail!(Usage("--pairs must be at least 1".into()));
    }
    let records = synthetic_fixture(&SyntheticOptions {
        attacks: a.attacks,
        pairs: a.pairs,
        seed: a.seed,
        ..SyntheticOptions::default()
    });
    write_log(&records, BufWriter::new(File::create(&a.out)?))?;
    info!("wrote {} records", records.len());
    Ok(ExitCode::SUCCESS)
}
