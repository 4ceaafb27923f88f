use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use streambandit::bounds::BoundReport;
use streambandit::harness::run_experiment;
use streambandit::report::{
    write_bounds, write_bounds_json, write_summaries, write_summaries_json, write_trace,
    SummaryRecord,
};
use streambandit::verify::{run_suite, Suite};
use streambandit::{DistributionSpec, ExperimentConfig, PayoutModel, StrategySpec};

/// Simulate strategies for streaming one-way bandits.
#[derive(Debug, Parser)]
#[command(name = "streambandit", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one Monte Carlo experiment and write a summary row.
    Simulate(SimulateArgs),
    /// Print β/η values and the loss bounds for a law.
    Bounds(BoundsArgs),
    /// Run one experiment per value of a swept parameter.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
struct ExperimentArgs {
    /// e.g. known-uniform, known-power:m=2, beta-threshold, oracle, always-first, adaptive:m=1|2
    #[arg(long, default_value = "known-uniform")]
    strategy: StrategySpec,
    /// uniform, power:m=2 or power:m=1,c=2
    #[arg(long, default_value = "uniform")]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 1_000, value_parser = clap::value_parser!(u64).range(1..))]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// bernoulli or fixed
    #[arg(long, default_value = "bernoulli")]
    payout: PayoutModel,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            dist: self.dist,
            strategy: self.strategy.clone(),
            n: self.n,
            k: self.k,
            episodes: self.episodes,
            master_seed: self.seed,
            payout: self.payout,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// CSV destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a JSON summary here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Write a per-decision trace of one episode to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "trace")]
    trace_episode: u64,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    c: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    N,
    K,
    M,
    C,
    Episodes,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    values: Vec<f64>,
    /// Set k = ceil(n^e) on every row.
    #[arg(long)]
    k_exponent: Option<f64>,
    /// Emit bound rows instead of running experiments.
    #[arg(long)]
    bounds_only: bool,
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "fast")]
    suite: Suite,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Errors caused by the invocation rather than the run.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: streambandit::Error) -> anyhow::Error {
    use streambandit::Error as E;
    match e {
        E::Domain { .. }
        | E::InvalidParameter(_)
        | E::Parse { .. }
        | E::ContractViolation(_)
        | E::ConfigMismatch(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(records: &[SummaryRecord], output: &OutputArgs) -> anyhow::Result<()> {
    write_summaries(sink(output.output.as_deref())?, records)?;
    if let Some(path) = &output.json {
        write_summaries_json(sink(Some(path))?, records)?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<ExitCode> {
    let config = args.experiment.config();
    let summary = run_experiment(&config).map_err(usage)?;
    emit(&[SummaryRecord::new(&config, &summary)], &args.output)?;
    if let Some(path) = &args.trace {
        let (_, rows) = config.trace_episode(args.trace_episode).map_err(usage)?;
        write_trace(sink(Some(path))?, args.trace_episode, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(args: &BoundsArgs) -> anyhow::Result<ExitCode> {
    let report = BoundReport::compute(args.n, args.m, args.c, args.k);
    write_bounds(
        sink(args.output.output.as_deref())?,
        std::slice::from_ref(&report),
    )?;
    if let Some(path) = &args.output.json {
        write_bounds_json(sink(Some(path))?, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn whole(param: &str, v: f64) -> anyhow::Result<u64> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(UsageError(format!(
            "--values: {param} needs positive integers, got {v}"
        ))
        .into())
    }
}

fn sweep(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let base = args.experiment.config();
    let mut configs = Vec::with_capacity(args.values.len());
    for &v in &args.values {
        let mut cfg = base.clone();
        match args.param {
            SweepParam::N => cfg.n = whole("n", v)?,
            SweepParam::K => cfg.k = whole("k", v)?,
            SweepParam::Episodes => cfg.episodes = whole("episodes", v)?,
            SweepParam::M => {
                let m = u32::try_from(whole("m", v)?)
                    .map_err(|_| UsageError(format!("m = {v} is too large")))?;
                cfg.dist = with_law(m, base.dist.c()).map_err(usage)?;
            }
            SweepParam::C => cfg.dist = with_law(base.dist.m(), v).map_err(usage)?,
        }
        if let Some(e) = args.k_exponent {
            cfg.k = ((cfg.n as f64).powf(e).ceil() as u64).max(1);
        }
        configs.push(cfg);
    }

    if args.bounds_only {
        let reports: Vec<BoundReport> = configs
            .iter()
            .map(|c| BoundReport::compute(c.n, c.dist.m(), c.dist.c(), Some(c.k)))
            .collect();
        write_bounds(sink(args.output.output.as_deref())?, &reports)?;
        return Ok(ExitCode::SUCCESS);
    }
    let records = configs
        .iter()
        .map(|c| run_experiment(c).map(|s| SummaryRecord::new(c, &s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    emit(&records, &args.output)?;
    Ok(ExitCode::SUCCESS)
}

fn with_law(m: u32, c: f64) -> streambandit::Result<DistributionSpec> {
    if c != 1.0 {
        DistributionSpec::scaled_power(m, c)
    } else if m == 1 {
        Ok(DistributionSpec::uniform())
    } else {
        DistributionSpec::power(m)
    }
}

fn verify(args: &VerifyArgs) -> anyhow::Result<ExitCode> {
    let outcomes = run_suite(args.suite, |o| println!("{o}"));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
