use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use craftlearn_cli::commands::{self, CommandOutput, SystemChoice};
use craftlearn_cli::config::load_config;
use craftlearn_cli::Result;

#[derive(Parser)]
#[command(
    name = "craftlearn",
    version,
    about = "Trajectory optimization and policy learning for a planar thrust craft"
)]
struct Cli {
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    True,
    Model,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize on the approximate model only.
    DdpRun { config: PathBuf },
    /// Learn a control tape with real-system trials.
    Learn { config: PathBuf },
    /// Run a control tape open loop.
    Rollout {
        config: PathBuf,
        tape: PathBuf,
        #[arg(long, value_enum, default_value = "true")]
        system: System,
    },
    /// Evaluate every metric of a trajectory.
    Metrics { config: PathBuf, trajectory: PathBuf },
    /// Compare two trajectories criterion by criterion.
    Compare { config: PathBuf, a: PathBuf, b: PathBuf },
    /// Fly the scripted PD baseline on the true system.
    Baseline { config: PathBuf },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::DdpRun { config }
            | Command::Learn { config }
            | Command::Rollout { config, .. }
            | Command::Metrics { config, .. }
            | Command::Compare { config, .. }
            | Command::Baseline { config } => config,
        }
    }
}

fn run(cli: &Cli) -> Result<CommandOutput> {
    let config = load_config(cli.command.config())?;
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    match &cli.command {
        Command::DdpRun { .. } => commands::ddp_run(&config, &out),
        Command::Learn { .. } => commands::learn_run(&config, &out).map(|(o, _)| o),
        Command::Rollout { tape, system, .. } => {
            let system = match system {
                System::True => SystemChoice::True,
                System::Model => SystemChoice::Model,
            };
            commands::rollout_run(&config, tape, system, &out)
        }
        Command::Metrics { trajectory, .. } => commands::metrics_run(&config, trajectory, &out),
        Command::Compare { a, b, .. } => commands::compare_run(&config, a, b, &out),
        Command::Baseline { .. } => commands::baseline_run(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            for line in &output.lines {
                println!("{line}");
            }
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            ExitCode::from(output.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
