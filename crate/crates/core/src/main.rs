use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kerrq::runner::{self, RunConfig, Task};

/// Batch driver for the driven-dissipative Kerr cavity toolkit.
#[derive(Parser)]
#[command(name = "kerrq", version, about)]
struct Cli {
    /// TOML configuration file (ignored by `validate`, which uses built-in
    /// standard parameters).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the config's `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on concurrently running jobs (default: one per CPU).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-field steady-state branches and the bistability edges.
    Meanfield,
    /// Steady states across a pump sweep.
    NessSweep,
    /// Slowest Liouvillian eigenvalues across a pump sweep.
    Spectrum,
    /// Closed-form steady-state moments from the hypergeometric solution.
    ExactMoments,
    /// Sudden-quench trajectories with entropy rates per output step.
    Quench,
    /// Built-in cross-check suite against closed-form references.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let task = match cli.command {
        Command::Meanfield => Task::Meanfield,
        Command::NessSweep => Task::NessSweep,
        Command::Spectrum => Task::Spectrum,
        Command::ExactMoments => Task::ExactMoments,
        Command::Quench => Task::Quench,
        Command::Validate => Task::Validate,
    };

    let config = if task == Task::Validate {
        RunConfig::default()
    } else {
        let path = cli
            .config
            .as_ref()
            .context("--config is required for this subcommand")?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        runner::parse_config(&text)?
    };

    let manifest = runner::run(&config, task, cli.out.as_deref(), cli.jobs)?;
    for job in &manifest.jobs {
        match &job.error {
            None => println!("{}: ok ({:.1}s)", job.name, job.seconds),
            Some(e) => println!("{}: FAILED ({:.1}s): {e}", job.name, job.seconds),
        }
    }
    println!(
        "{} job(s) finished in {:.1}s",
        manifest.jobs.len(),
        manifest.total_seconds
    );
    Ok(manifest.all_ok())
}
