use std::path::PathBuf;
use std::process::ExitCode;

use balflow::{Command, ExperimentConfig, HarnessError};
use clap::{Parser, Subcommand};

/// Balanced metrics, balancing flows and the Ω-Kähler flow on model surfaces.
#[derive(Debug, Parser)]
#[command(name = "balflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-k runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// T_k iteration and balancing flow for each k.
    Balanced,
    /// Error-vs-k tables for the Bergman density, Q_k and β_k.
    BergmanAsymptotics,
    /// PDE flow vs balancing flows at the sample times.
    Quantization,
    /// PDE flow to convergence.
    Calabi,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Balanced => Command::Balanced,
            Cmd::BergmanAsymptotics => Command::BergmanAsymptotics,
            Cmd::Quantization => Command::Quantization,
            Cmd::Calabi => Command::Calabi,
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let Some(path) = cli.config else {
        return Err(HarnessError::Config { key: "--config".into(), message: "a config file is required".into() });
    };
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let command = Command::from(cli.command);
    let out = cli
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = balflow::run_command(command, &config, &out, threads)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("balflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
