//! `cqoverlap`: generate channel instances, compute optimal output overlaps,
//! build reduction channels, run conjecture scans and SWAP-test simulations.

mod commands;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{usage, CliResult};

pub const THREADS_ENV: &str = "CQOVERLAP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "cqoverlap", version, about = "Output-overlap extremes of classical-quantum channels")]
pub struct Cli {
    /// Base seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Override the tolerance a command judges its results against.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Also write the run report to this file.
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a random channel instance.
    Gen(GenArgs),
    /// Minimize or maximize the output overlap of an instance.
    Solve(SolveArgs),
    /// Build a reduction channel from an acceptance table and classify it.
    Reduce(ReduceArgs),
    /// Scan random channels for counterexamples to the k-state bound.
    Conjecture(ConjectureArgs),
    /// Simulate the SO and LO verifiers on a witness pair.
    Swaptest(SwaptestArgs),
    /// Check an instance file or acceptance table.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Oracle,
    Grid,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value_t = Method::Closed)]
    pub method: Method,
    /// TOML file with optimizer settings (restarts, max_iters, step_init,
    /// grad_tol, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Lattice resolution of the grid method.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    So,
    Lo,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub table: PathBuf,
    /// Where to write the reduction channel.
    #[arg(long)]
    pub out: PathBuf,
    /// Completeness; defaults to 1 for SO and 5/8 for LO.
    #[arg(long)]
    pub c: Option<f64>,
    /// Soundness; defaults to 1/2 for SO and 9/16 for LO.
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ConjectureArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub instances: usize,
    #[arg(long)]
    pub tuples: usize,
    #[arg(long)]
    pub out_csv: PathBuf,
    /// Locally polish the best tuple of instances whose margin is below this.
    #[arg(long)]
    pub polish_below: Option<f64>,
    /// Directory for candidate instances; defaults to the CSV's directory.
    #[arg(long)]
    pub candidates_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifierArg {
    So,
    Lo,
    Both,
}

#[derive(Args, Debug)]
pub struct SwaptestArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// First witness index, counted from 1.
    #[arg(long)]
    pub i: usize,
    /// Second witness index, counted from 1.
    #[arg(long)]
    pub j: usize,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = VerifierArg::Both)]
    pub verifier: VerifierArg,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot size the worker pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| commands::dispatch(&cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
