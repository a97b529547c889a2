use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rebar_cli::{cmd_check, cmd_oracle, cmd_plot, cmd_verify, run_to_exit};

/// Collision-avoidance verification for multi-agent systems with learned
/// controllers: offline backprojection computation, containment proofs, and
/// fast online safety checks. Set REBAR_LOG={error,warn,info,debug} for
/// diagnostics.
#[derive(Parser)]
#[command(name = "rebar", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every agent pair of a scenario and write a safety report.
    Verify {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Concurrent pair jobs.
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Backprojection horizon; overrides the scenario value.
        #[arg(long)]
        tau: Option<usize>,
        /// Facet count; overrides the scenario value.
        #[arg(long)]
        facets: Option<usize>,
        /// Report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a report against a measurement-uncertainty polytope.
    Check {
        /// Safety report produced by `verify`.
        report: PathBuf,
        /// Uncertainty polytope JSON over the relative position.
        #[arg(long)]
        uncertainty: PathBuf,
        /// Restrict to one pair (two indices).
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        pair: Option<Vec<usize>>,
        /// Repeat the check to gather latency percentiles.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Render a report pair as an SVG overlay.
    Plot {
        /// Safety report produced by `verify`.
        report: PathBuf,
        /// Restrict to one pair (two indices).
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        pair: Option<Vec<usize>>,
        /// CSV of sampled predecessor points to overlay.
        #[arg(long)]
        rbpua: Option<PathBuf>,
        /// SVG output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the solver pipeline against sampling and enumeration ground
    /// truth for one pair.
    Oracle {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Pair to examine (two indices, default 0 1).
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        pair: Option<Vec<usize>>,
        /// Write the sampled predecessors as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pair_of(v: Option<Vec<usize>>) -> Option<(usize, usize)> {
    v.map(|p| (p[0], p[1]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify { scenario, workers, tau, facets, out } => {
            run_to_exit(cmd_verify(&scenario, workers, tau, facets, out.as_deref()))
        }
        Command::Check { report, uncertainty, pair, repeat } => {
            run_to_exit(cmd_check(&report, &uncertainty, pair_of(pair), repeat))
        }
        Command::Plot { report, pair, rbpua, out } => {
            run_to_exit(cmd_plot(&report, pair_of(pair), rbpua.as_deref(), &out))
        }
        Command::Oracle { scenario, pair, out } => {
            run_to_exit(cmd_oracle(&scenario, pair_of(pair), out.as_deref()))
        }
    };
    ExitCode::from(code as u8)
}
