//! `cavity-ghz` command-line driver.

use cavity_ghz_cli::commands;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "cavity-ghz", version, about = "Cavity-mediated GHZ gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct RunArgs {
    /// JSON run configuration; overlays the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled parameter set: paper_n2 or paper_n4.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one gate and write trajectory.csv and summary.json.
    Simulate(RunArgs),
    /// Run a one- or two-axis parameter grid and write sweep.csv.
    Sweep(RunArgs),
    /// Run the self-check suite and print a pass/fail table.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Offset of the sampled test times.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute the decoherence budget and write budget.json.
    Budget(RunArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let jobs = match &cli.command {
        Command::Simulate(a) | Command::Sweep(a) | Command::Budget(a) => a.jobs,
        Command::Validate { jobs, .. } => *jobs,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Simulate(a) => commands::simulate(&a.config, &a.preset, &a.out),
        Command::Sweep(a) => commands::sweep(&a.config, &a.preset, &a.out),
        Command::Budget(a) => commands::budget(&a.config, &a.preset, &a.out),
        Command::Validate { level, seed, .. } => commands::validate(
            match level {
                LevelArg::Fast => cavity_ghz::validation::Level::Fast,
                LevelArg::Full => cavity_ghz::validation::Level::Full,
            },
            seed,
        ),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
