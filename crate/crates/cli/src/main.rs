mod bounds;
mod config;
mod error;
mod output;
mod simulate;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::bounds::BoundsRequest;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::validate::Suite;

/// Normal-gamma Thompson sampling: regret simulation, bounds and checks.
#[derive(Parser, Debug)]
#[command(name = "ngbandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate Bayesian regret curves and write them as CSV.
    Simulate(SimulateArgs),
    /// Evaluate the per-arm regret bounds and the theorem scale.
    Bounds(BoundsArgs),
    /// Run Monte-Carlo and grid checks of the analysis.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig2a, fig2b or fig2c.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated list of ng_ts, gauss_ts, random, oracle.
    #[arg(long)]
    agents: Option<String>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record cumulative regret every N rounds.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    alpha_star: Option<f64>,
    #[arg(long)]
    beta_star: Option<f64>,
    #[arg(long)]
    shared_contexts: Option<bool>,
    /// Known precision used by gauss_ts.
    #[arg(long)]
    fixed_precision: Option<f64>,
    /// Initial posterior rate after the first pull of an arm.
    #[arg(long)]
    beta1: Option<f64>,
    /// first_observation or prior (start every arm at the environment prior).
    #[arg(long)]
    init: Option<String>,
}

impl SimulateArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("seed", self.seed.map(|v| v.to_string()));
        put("replications", self.replications.map(|v| v.to_string()));
        put("horizon", self.horizon.map(|v| v.to_string()));
        put("agents", self.agents.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("stride", self.stride.map(|v| v.to_string()));
        put("arms", self.arms.map(|v| v.to_string()));
        put("dim", self.dim.map(|v| v.to_string()));
        put("alpha_star", self.alpha_star.map(|v| v.to_string()));
        put("beta_star", self.beta_star.map(|v| v.to_string()));
        put("shared_contexts", self.shared_contexts.map(|v| v.to_string()));
        put("fixed_precision", self.fixed_precision.map(|v| v.to_string()));
        put("beta1", self.beta1.map(|v| v.to_string()));
        put("init", self.init.clone());
        o
    }
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Gaps Δ_k, comma-separated; zero marks an optimal arm.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    deltas: Option<Vec<f64>>,
    /// Precisions τ_k, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    taus: Option<Vec<f64>>,
    /// Sample the environment from the prior instead.
    #[arg(long)]
    env_seed: Option<u64>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long)]
    alpha_star: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta_star: f64,
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    /// Theorem exponent ε in (1/α*, 2/5); enables the theorem scale.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-arm CSV destination.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Monte-Carlo draws per check.
    #[arg(long, default_value_t = 100_000)]
    mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NGBANDIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("NGBANDIT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(args) => {
            let config = ExperimentConfig::resolve(args.config.as_deref(), args.preset.as_deref(), &args.overrides())?;
            simulate::run(&config)
        }
        Command::Bounds(a) => bounds::run(&BoundsRequest {
            deltas: a.deltas,
            taus: a.taus,
            env_seed: a.env_seed,
            arms: a.arms,
            dim: a.dim,
            alpha_star: a.alpha_star,
            beta_star: a.beta_star,
            horizon: a.horizon,
            epsilon: a.epsilon,
            csv: a.csv,
        }),
        Command::Validate(a) => validate::run(a.suite, a.mc, a.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
