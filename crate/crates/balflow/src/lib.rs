//! Experiment harness for `balflow-core`: TOML configs, the four pipelines,
//! CSV traces and JSON run manifests.

pub mod config;
pub mod error;
pub mod output;
pub mod pipelines;
mod pool;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::ExperimentConfig;
pub use error::HarnessError;
use output::{Manifest, OutputFile, MANIFEST_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Balanced,
    BergmanAsymptotics,
    Quantization,
    Calabi,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Balanced => "balanced",
            Self::BergmanAsymptotics => "bergman-asymptotics",
            Self::Quantization => "quantization",
            Self::Calabi => "calabi",
        }
    }
}

/// Output directory and worker count shared by the per-`k` tasks of one run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub dir: PathBuf,
    pub threads: usize,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// What a pipeline hands back: its report and the files it wrote.
pub struct Artifacts<R> {
    pub report: R,
    pub files: Vec<OutputFile>,
}

/// Runs `body` in `dir`, then writes the manifest whether or not it
/// succeeded.
fn execute<R: Serialize>(
    command: Command,
    config: &ExperimentConfig,
    dir: &Path,
    threads: usize,
    body: impl FnOnce(&ExperimentConfig, &RunContext) -> Result<Artifacts<R>, HarnessError>,
) -> Result<R, HarnessError> {
    std::fs::create_dir_all(dir).map_err(error::io_error(dir))?;
    let ctx = RunContext { dir: dir.to_path_buf(), threads: threads.max(1) };
    let start = Instant::now();
    let outcome = body(config, &ctx);
    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        run_id: Manifest::run_id(command.name(), config),
        command: command.name().to_string(),
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        status: "ok".to_string(),
        error: None,
        files: Vec::new(),
        summary: serde_json::Value::Null,
    };
    match outcome {
        Ok(a) => {
            manifest.files = a.files;
            manifest.summary = serde_json::to_value(&a.report).expect("report serializes");
            manifest.write(dir)?;
            Ok(a.report)
        }
        Err(e) => {
            manifest.status = "failed".to_string();
            manifest.error = Some(e.to_string());
            manifest.write(dir)?;
            Err(e)
        }
    }
}

pub fn run_balanced(config: &ExperimentConfig, dir: &Path, threads: usize) -> Result<pipelines::balanced::BalancedReport, HarnessError> {
    execute(Command::Balanced, config, dir, threads, pipelines::balanced::run)
}

pub fn run_bergman_asymptotics(
    config: &ExperimentConfig,
    dir: &Path,
    threads: usize,
) -> Result<pipelines::asymptotics::AsymptoticsReport, HarnessError> {
    execute(Command::BergmanAsymptotics, config, dir, threads, pipelines::asymptotics::run)
}

pub fn run_quantization(
    config: &ExperimentConfig,
    dir: &Path,
    threads: usize,
) -> Result<pipelines::quantization::QuantizationReport, HarnessError> {
    execute(Command::Quantization, config, dir, threads, pipelines::quantization::run)
}

pub fn run_calabi(config: &ExperimentConfig, dir: &Path, threads: usize) -> Result<pipelines::calabi::CalabiReport, HarnessError> {
    execute(Command::Calabi, config, dir, threads, pipelines::calabi::run)
}

/// Dispatches `command` and returns its report as JSON.
pub fn run_command(command: Command, config: &ExperimentConfig, dir: &Path, threads: usize) -> Result<serde_json::Value, HarnessError> {
    let value = match command {
        Command::Balanced => serde_json::to_value(run_balanced(config, dir, threads)?),
        Command::BergmanAsymptotics => serde_json::to_value(run_bergman_asymptotics(config, dir, threads)?),
        Command::Quantization => serde_json::to_value(run_quantization(config, dir, threads)?),
        Command::Calabi => serde_json::to_value(run_calabi(config, dir, threads)?),
    };
    Ok(value.expect("report serializes"))
}
