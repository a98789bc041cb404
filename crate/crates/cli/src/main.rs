//! Command-line front end: built-in or inline problems, deterministic CSV
//! outputs with a JSON manifest next to every file.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unparseable
//! expressions), 3 for domain or convergence errors during the run.

// flag validation compares as `!(a < b)` so NaN values are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod builtins;
mod expr;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ufde",
    version,
    about = "Fractional Adams solver for Caputo and uncertain fractional differential equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve one α-path and write a t,x trajectory CSV
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Confidence level of the α-path
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "ufde_solve.csv")]
        out: PathBuf,
    },
    /// Sweep α and write the inverse-distribution surface
    Surface {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// α levels as lo:step:hi
        #[arg(long = "alpha-grid", default_value = "0.01:0.01:0.99")]
        alpha_grid: String,
        #[arg(long, default_value = "ufde_surface.csv")]
        out: PathBuf,
    },
    /// Inverse distribution of the extreme value of J over time
    Extreme {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "alpha-grid", default_value = "0.01:0.01:0.99")]
        alpha_grid: String,
        /// Monotone map J as an expression in x
        #[arg(long, default_value = "x", allow_hyphen_values = true)]
        j: String,
        #[arg(long = "j-direction", value_enum, default_value_t = DirectionArg::Increasing)]
        j_direction: DirectionArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Inf)]
        mode: ModeArg,
        #[arg(long, default_value = "ufde_extreme.csv")]
        out: PathBuf,
    },
    /// First-hitting-time distribution over a grid of horizons
    Fht {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Threshold level z (must exceed J(x0))
        #[arg(long)]
        z: f64,
        /// Horizons as lo:step:hi
        #[arg(long = "s-grid", default_value = "0.01:0.01:1")]
        s_grid: String,
        /// Monotone map J as an expression in x
        #[arg(long, default_value = "x", allow_hyphen_values = true)]
        j: String,
        #[arg(long, default_value = "ufde_fht.csv")]
        out: PathBuf,
    },
    /// Expected value of J along the solution at every grid time
    Expected {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "alpha-grid", default_value = "0.01:0.01:0.99")]
        alpha_grid: String,
        /// Monotone map J as an expression in x
        #[arg(long, default_value = "x", allow_hyphen_values = true)]
        j: String,
        #[arg(long, default_value = "ufde_expected.csv")]
        out: PathBuf,
    },
    /// MAE study of the linear benchmark against its closed form
    ErrorStudy {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Parameter to vary
        #[arg(long, value_enum)]
        vary: VaryArg,
        /// Comma-separated parameter values, e.g. 2,3,4
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "ufde_error_study.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
pub struct ProblemArgs {
    /// Built-in problem: eg1 (linear), eg2 (mean-reverting √), eg3 (nonlinear)
    #[arg(long, conflicts_with_all = ["drift", "diffusion"])]
    pub builtin: Option<String>,
    /// Drift expression f(t, x)
    #[arg(long, allow_hyphen_values = true)]
    pub drift: Option<String>,
    /// Diffusion expression g(t, x); defaults to 0 (deterministic problem)
    #[arg(long, requires = "drift", allow_hyphen_values = true)]
    pub diffusion: Option<String>,
    /// Override a built-in parameter, e.g. --param a=0.7 (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Initial value (overrides the built-in default; required inline)
    #[arg(long)]
    pub x0: Option<f64>,
    /// Fractional order ν in (0, 1]
    #[arg(long, default_value_t = 0.8)]
    pub nu: f64,
}

#[derive(Args)]
pub struct SolverArgs {
    /// Interpolation order n (nodes per window)
    #[arg(long = "n", default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = MemoryArg::Full)]
    pub memory: MemoryArg,
    /// Fixed-point corrector passes per step
    #[arg(long = "corrector-iters", default_value_t = 1)]
    pub corrector_iters: usize,
    /// Sub-step factor for the first n intervals (1 disables)
    #[arg(long = "bootstrap-refine", default_value_t = 10)]
    pub bootstrap_refine: usize,
    #[arg(long = "domain-policy", value_enum, default_value_t = PolicyArg::Error)]
    pub domain_policy: PolicyArg,
}

#[derive(Args)]
pub struct GridArgs {
    /// Time step
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long = "t-start", default_value_t = 0.0)]
    pub t_start: f64,
    #[arg(long = "t-end", default_value_t = 1.0)]
    pub t_end: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MemoryArg {
    Full,
    Increment,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Error,
    Clamp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Increasing,
    Decreasing,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Inf,
    Sup,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    N,
    Nu,
    Upsilon,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
