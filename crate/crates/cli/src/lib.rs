//! The `fkent` command-line driver: parses flags and config files, runs one
//! command from [`fk_core`], and writes reproducible CSV/JSON artifacts.
//!
//! Exit status: 0 on success, 1 on configuration/domain errors (including
//! unknown commands and failed `verify` suites), 2 on I/O errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use config::{parse_list, parse_n_range, RunConfig, ShortForm};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "FKENT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fk_core::Error),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fkent", version, about = "Feldman-Katok orbit metrics and entropy estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print an orbit segment.
    Orbit(Opts),
    /// Distance between the orbit segments of --x and --y.
    Metric(Opts),
    /// Spanning or separated set sizes of a sample.
    Span(Opts),
    /// Topological entropy curve from separated/spanning counts.
    EntropyTop(Opts),
    /// Measure entropy curve from sp(μ, n, ε).
    EntropyKatok(Opts),
    /// Local entropy from FK ball masses.
    EntropyBrinkatok(Opts),
    /// Compare sp(μ, n, ε) with a growth scale U(n).
    Complexity(Opts),
    /// Empirical check of Katok's word criterion.
    Criterion(Opts),
    /// Distribution of the weak-mean distance over random pairs.
    ProbeErgodic(Opts),
    /// Property suites: lemma-chain, orbit-shift, order-free, oracle, sandwich, all.
    Verify(Opts),
}

#[derive(Debug, Args)]
struct Opts {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full_shift:K[:H], rotation:A, doubling[:H], tent[:H], logistic, two_fixed_points, or JSON.
    #[arg(long)]
    system: Option<String>,
    /// bernoulli:p0,p1,..., lebesgue, arcsine, or JSON. Defaults to the system's natural measure.
    #[arg(long)]
    measure: Option<String>,
    /// Measure the topological sample is drawn from.
    #[arg(long)]
    sampler: Option<String>,
    /// A point: real coordinate, symbol word (e.g. 0110), or a:X / b:X.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Orbit lengths: N, A..B (inclusive), A..B:STEP, or a comma list.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated radii.
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated ball radii for local entropy.
    #[arg(long)]
    delta: Option<String>,
    /// Bisection tolerance for FK distances.
    #[arg(long)]
    tol: Option<f64>,
    /// bowen, mean, fk, fk_unordered or weakmean.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Topological sample size.
    #[arg(long = "N")]
    sample_size: Option<usize>,
    /// Size of the empirical measure.
    #[arg(long = "m", alias = "M")]
    measure_size: Option<usize>,
    #[arg(long = "pairs")]
    pair_count: Option<usize>,
    #[arg(long = "candidates")]
    candidate_count: Option<usize>,
    /// Number of base points for local entropy.
    #[arg(long = "bases")]
    base_count: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// spanning or separated.
    #[arg(long)]
    set: Option<String>,
    /// Exhaustive optimum instead of greedy (samples of at most 12 points).
    #[arg(long)]
    exact: bool,
    /// Slope fit window: resolved[:FRACTION], top_half, all, or LO..HI.
    #[arg(long)]
    fit: Option<String>,
    /// zero or bins:K.
    #[arg(long)]
    partition: Option<String>,
    /// power:A[:C], linear:A, or exp:B[:C].
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    suite: Option<String>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn short<T: ShortForm>(v: Option<String>) -> Result<Option<T>, CliError> {
    v.map(|s| T::parse_short(&s)).transpose().map_err(CliError::Config)
}

impl Opts {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let list = |v: Option<String>, what| v.map(|s| parse_list(&s, what)).transpose().map_err(CliError::Config);
        let flags = RunConfig {
            system: short(self.system)?,
            measure: short(self.measure)?,
            sampler: short(self.sampler)?,
            x: self.x,
            y: self.y,
            n: self.n.map(|s| parse_n_range(&s)).transpose().map_err(CliError::Config)?,
            eps: list(self.eps, "eps")?,
            delta: list(self.delta, "delta")?,
            tol: self.tol,
            kind: short(self.kind)?,
            seed: self.seed,
            sample_size: self.sample_size,
            measure_size: self.measure_size,
            pair_count: self.pair_count,
            candidate_count: self.candidate_count,
            base_count: self.base_count,
            trials: self.trials,
            set: short(self.set)?,
            exact: self.exact.then_some(true),
            fit: short(self.fit)?,
            partition: short(self.partition)?,
            scale: short(self.scale)?,
            threshold: self.threshold,
            suite: self.suite,
            out: self.out,
        };
        Ok(base.overlay(flags))
    }
}

impl Command {
    fn split(self) -> (&'static str, Opts) {
        match self {
            Command::Orbit(o) => ("orbit", o),
            Command::Metric(o) => ("metric", o),
            Command::Span(o) => ("span", o),
            Command::EntropyTop(o) => ("entropy-top", o),
            Command::EntropyKatok(o) => ("entropy-katok", o),
            Command::EntropyBrinkatok(o) => ("entropy-brinkatok", o),
            Command::Complexity(o) => ("complexity", o),
            Command::Criterion(o) => ("criterion", o),
            Command::ProbeErgodic(o) => ("probe-ergodic", o),
            Command::Verify(o) => ("verify", o),
        }
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`], if set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    // a pool built earlier in the process (tests) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs one invocation and returns the process exit status. Diagnostics go
/// to stderr, results to stdout or `--out`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fkent: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (command, opts) = cli.command.split();
    let config = opts.into_config()?;
    let out = config.out.clone();
    let outcome = commands::run(command, config)?;
    match (&out, &outcome.summary) {
        (Some(path), summary) => {
            outcome.artifact.emit(Some(path))?;
            if let Some(s) = summary {
                println!("{s}");
            }
        }
        (None, Some(s)) => println!("{s}"),
        (None, None) => outcome.artifact.emit(None)?,
    }
    match outcome.failed {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(()),
    }
}
