//! `mabinogion`: exact values, simulations and checks for the Mabinogion urn.
//!
//! Exit status is 0 on success, 1 when a `verify` check fails and 2 for
//! usage errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mabinogion::exact::ExactRational;
use mabinogion::output::Format;
use mabinogion::strategy::StrategySpec;

use args::{ExactQuantity, Grid, Process};

#[derive(Debug, Parser)]
#[command(name = "mabinogion", version, about = "Exact and simulated analysis of the Mabinogion urn")]
pub struct Cli {
    /// Output format
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,

    /// Worker threads for simulations and audits
    #[arg(long, global = true, env = "MAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact value of a quantity from one state
    Exact(ExactArgs),
    /// Monte Carlo summary; also drives the table and q-scan modes
    Simulate(SimulateArgs),
    /// Simulated (q, mu) grid of q-threshold strategies
    ScanQ(ScanArgs),
    /// Policy A absorption times on the (N, x) grid
    Table1(Table1Args),
    /// Identity, oracle and asymptotic-bound checks
    Verify(VerifyArgs),
    /// Asymptotic approximations against exact values
    Audit(AuditArgs),
    /// Black-count trajectories for plotting
    Paths(PathsArgs),
    /// Brute-force linear-system value under any strategy
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// White balls
    #[arg(short = 'w', long = "white", value_parser = args::count)]
    pub white: u64,
    /// Black balls
    #[arg(short = 'b', long = "black", value_parser = args::count)]
    pub black: u64,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// m, a, R, q:<rational> or conditional
    #[arg(long, default_value = "m", value_parser = args::process)]
    pub process: Process,
    /// time, final-black, absorb-prob or discounted:<mu>
    #[arg(long, default_value = "time", value_parser = args::quantity)]
    pub quantity: ExactQuantity,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(short = 'w', long = "white", value_parser = args::count)]
    pub white: Option<u64>,
    #[arg(short = 'b', long = "black", value_parser = args::count)]
    pub black: Option<u64>,
    /// none, A, R or q:<rational>
    #[arg(long, default_value = "none", value_parser = args::strategy)]
    pub strategy: StrategySpec,
    #[arg(long, default_value = "10000", value_parser = args::count)]
    pub runs: u64,
    #[arg(long, default_value = "0", value_parser = args::count)]
    pub seed: u64,
    /// Discount rate; a list or start:end:count grid with --scan-q
    #[arg(long)]
    pub mu: Option<String>,
    /// Sample the chain conditioned to end all black
    #[arg(long)]
    pub conditional: bool,
    #[arg(long, default_value = "250", value_parser = args::count)]
    pub batch_size: u64,
    /// Simulate the (N, x) benchmark grid instead of a single start
    #[arg(long)]
    pub table1: bool,
    /// Reduced runs for the largest totals in --table1 mode
    #[arg(long, value_parser = args::count)]
    pub large_runs: Option<u64>,
    /// q grid, e.g. 0.5:1.0:50
    #[arg(long)]
    pub scan_q: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// q values, e.g. 0.5:1.0:50 or 1/2,3/5
    #[arg(long = "q", value_parser = args::grid_arg)]
    pub q: Grid,
    /// Discount rates, e.g. 0:0.02:20
    #[arg(long, default_value = "0", value_parser = args::grid_arg)]
    pub mu: Grid,
    #[arg(long, default_value = "10000", value_parser = args::count)]
    pub runs: u64,
    #[arg(long, default_value = "0", value_parser = args::count)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[arg(long, default_value = "10000", value_parser = args::count)]
    pub runs: u64,
    /// Runs for totals at or above --large-from
    #[arg(long, value_parser = args::count)]
    pub large_runs: Option<u64>,
    #[arg(long, default_value = "200000", value_parser = args::count)]
    pub large_from: u64,
    #[arg(long, default_value = "0", value_parser = args::count)]
    pub seed: u64,
    /// Comma separated totals (default: 200,2000,20000,200000,2000000)
    #[arg(long, value_delimiter = ',', value_parser = args::count)]
    pub totals: Option<Vec<u64>>,
    /// Black fractions (default: 0.5,0.505,0.55,0.6,0.75)
    #[arg(long, value_parser = args::grid_arg)]
    pub fractions: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Binomial double-sum identities
    #[arg(long)]
    pub identities: bool,
    /// Closed forms against linear-system and dynamic-programming oracles
    #[arg(long)]
    pub oracle: bool,
    /// Error bounds of the asymptotic formulas
    #[arg(long)]
    pub asymptotics: bool,
    #[arg(long, default_value = "200", value_parser = args::count)]
    pub max_n: u64,
    #[arg(long, default_value = "30", value_parser = args::count)]
    pub max_total: u64,
    /// First k of the asymptotic checks; the published bounds start above 3
    #[arg(long, default_value = "4", value_parser = args::count)]
    pub k_min: u64,
    #[arg(long, default_value = "200", value_parser = args::count)]
    pub k_max: u64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// t-sym, v-a, t-a, p, ratio-v, ratio-t or t-skewed:<x>
    #[arg(long, default_value = "v-a")]
    pub quantity: String,
    #[arg(long, default_value = "1", value_parser = args::count)]
    pub k_min: u64,
    #[arg(long, default_value = "200", value_parser = args::count)]
    pub k_max: u64,
    #[arg(long, default_value = "1", value_parser = args::count)]
    pub step: u64,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "5", value_parser = args::count)]
    pub n_paths: u64,
    #[arg(long, default_value = "0", value_parser = args::count)]
    pub seed: u64,
    #[arg(long, default_value = "none", value_parser = args::strategy)]
    pub strategy: StrategySpec,
    #[arg(long)]
    pub conditional: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "none", value_parser = args::strategy)]
    pub strategy: StrategySpec,
    /// time or final-black
    #[arg(long, default_value = "final-black", value_parser = args::quantity)]
    pub quantity: ExactQuantity,
    /// Exact per-step discount factor in (0, 1] for final-black
    #[arg(long, value_parser = args::factor)]
    pub discount_factor: Option<ExactRational>,
}

/// How a command failed.
#[derive(Debug)]
pub enum Failure {
    /// bad flags or an invalid combination
    Usage(String),
    /// a check did not hold; the report is still printed
    Verification(String),
}

impl From<mabinogion::Error> for Failure {
    fn from(e: mabinogion::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let (envelope, failure) = match commands::run(&cli.command) {
        Ok(env) => (Some(env), None),
        Err((env, f)) => (env.map(|e| *e), Some(f)),
    };
    if let Some(env) = envelope {
        print!("{}", env.render(cli.format));
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Some(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}
