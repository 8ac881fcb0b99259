//! `waterline` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "waterline", version, about = "Influence-budget allocation over consensus networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Common {
    /// Problem JSON file.
    pub problem: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Water-filling solve of a linear-objective problem.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write waterline.csv, profiles.csv and bisection.csv.
        #[arg(long)]
        emit_plot_data: bool,
        /// Sample count for the plot CSVs.
        #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
        plot_points: u64,
        /// Compare against the brute-force oracle (small problems only).
        #[arg(long)]
        oracle: bool,
        /// Oracle switch grid.
        #[arg(long, default_value_t = 12)]
        grid: usize,
    },
    /// Integrate the dynamics under a schedule.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Schedule JSON; without it (and without --solve) every channel is idle.
        #[arg(long, conflicts_with = "solve")]
        schedule: Option<PathBuf>,
        /// Simulate the water-filling (or late-decider) solution.
        #[arg(long)]
        solve: bool,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
    },
    /// Switch-count bounds per channel.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force oracle against the solver.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        grid: usize,
        /// Cap on switches per channel (default: the general bound).
        #[arg(long)]
        max_switches: Option<usize>,
        /// Interior effort levels per channel; 0 enumerates bang-bang only.
        #[arg(long, default_value_t = 0)]
        interior_levels: usize,
    },
    /// Switch bounds over random geometric graphs.
    Sweep {
        /// Sizes as `start:end:step` (inclusive) or a comma list.
        #[arg(long, default_value = "20:200:20")]
        n: String,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Multiplier on the connectivity radius sqrt(2 ln n / (pi n)).
        #[arg(long, default_value_t = 1.0)]
        radius_factor: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Late-decider loop for a sigmoid-objective problem.
    Sigmoid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = waterline::sigmoid::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = waterline::sigmoid::DEFAULT_STEPS)]
        steps: usize,
    },
    /// Write a bundled problem file.
    Example {
        /// One of k2, seven-agent, seven-agent-sigmoid.
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve { common, emit_plot_data, plot_points, oracle, grid } => {
            commands::solve(&common, emit_plot_data, plot_points as usize, oracle.then_some(grid))
        }
        Command::Simulate { common, schedule, solve, steps } => {
            commands::trajectory(&common, schedule.as_deref(), solve, steps)
        }
        Command::Bounds { common } => commands::bounds(&common),
        Command::Oracle { common, grid, max_switches, interior_levels } => {
            commands::oracle(&common, grid, max_switches, interior_levels)
        }
        Command::Sweep { n, instances, seed, radius_factor, out } => {
            commands::sweep(&n, instances, seed, radius_factor, &out)
        }
        Command::Sigmoid { common, epsilon, max_iters, steps } => {
            commands::sigmoid(&common, epsilon, max_iters, steps)
        }
        Command::Example { name, out } => commands::example(&name, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
