//! `physarum`: solve, verify and reproduce the lower bound from the command line.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exit::Failure;

#[derive(Parser, Debug)]
#[command(name = "physarum", version, about = "Physarum dynamics for linear programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the discrete or continuous dynamics on an instance.
    Solve(SolveArgs),
    /// Enumerate basic solutions and print opt, Phi and the optimal set.
    Oracle {
        instance: PathBuf,
    },
    /// Print gamma_A, D, D_S, h0, Psi0, C1, C2, C3 and rho_A as fractions.
    Constants {
        instance: PathBuf,
    },
    /// Append the column b and print the extended instance with its start.
    Precondition {
        instance: PathBuf,
        /// Write the extended instance here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the two-column lower-bound construction.
    Lowerbound(LowerboundArgs),
    /// Write a generated instance as JSON.
    Generate(GenerateArgs),
    /// Run the invariant suites against an instance and optional trace.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMode {
    Directed,
    Undirected,
    UndirectedContinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Rk4,
    Euler,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Defaults to the instance's own mode.
    #[arg(long, value_enum)]
    pub mode: Option<SolveMode>,
    /// Step size: "auto" or a number in (0, 1).
    #[arg(long, default_value = "auto")]
    pub h: String,
    /// Target distance to the optimal set (or fixed-point gap without oracle).
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iters: u64,
    /// Write the trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Record every n-th iteration (continuous: every n-th step).
    #[arg(long, default_value_t = 1)]
    pub trace_stride: u64,
    /// Skip the brute-force oracle.
    #[arg(long)]
    pub no_oracle: bool,
    /// Use the exact Phi/opt from the oracle instead of 1/C3 for "auto".
    #[arg(long)]
    pub use_oracle_phi: bool,
    /// Treat the start as feasible when alpha cannot be enumerated.
    #[arg(long)]
    pub assume_feasible: bool,
    #[arg(long, value_enum, default_value = "rk4")]
    pub integrator: IntegratorArg,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Horizon of the continuous dynamics.
    #[arg(long = "T", default_value_t = 30.0)]
    pub t_end: f64,
}

#[derive(Args, Debug)]
pub struct LowerboundArgs {
    #[arg(long, default_value_t = 1)]
    pub opt: i64,
    #[arg(long, default_value_t = 1)]
    pub phi: i64,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// One or more thresholds.
    #[arg(long, num_args = 1.., default_values_t = [0.1, 0.01, 0.001])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iters: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    ShortestPath,
    Transshipment,
    RandomPositiveLp,
    ThmOne,
    Triangle,
    ZeroCostDemo,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GeneratorKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows of a random LP.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Columns of a random LP.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub nodes: usize,
    #[arg(long, default_value_t = 6)]
    pub edges: usize,
    #[arg(long, default_value_t = 5)]
    pub max_cost: i64,
    #[arg(long, default_value_t = 3)]
    pub max_supply: i64,
    #[arg(long, default_value_t = 1)]
    pub opt: i64,
    #[arg(long, default_value_t = 1)]
    pub phi: i64,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Require a unique optimal basic solution (random LPs).
    #[arg(long)]
    pub unique_optimum: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Directed,
    Undirected,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub instance: PathBuf,
    /// Trace CSV of a constant-step directed run to check as well.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Step size of the trace; inferred from its first rows when absent.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
