//! Experiment harness for `rslax-core`: JSON configs in, CSV/JSON reports out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use config::{Command, ExperimentConfig};
use output::{OutputDir, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
}

/// Loads the config, runs the command and writes `report.json` last.
pub fn run(opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    if !(opts.tol_scale >= 0.0 && opts.tol_scale.is_finite()) {
        return Err(CliError::ConfigInvalid(format!(
            "--tol-scale must be finite and non-negative, got {}",
            opts.tol_scale
        )));
    }
    let cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(declared) = cfg.command {
        if declared != opts.command {
            return Err(CliError::ConfigInvalid(format!(
                "config is for `{}` but the subcommand is `{}`",
                declared.name(),
                opts.command.name()
            )));
        }
    }
    let seed = opts.seed.unwrap_or(cfg.seed);
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let mut report = RunReport::new(opts.command.name(), seed, opts.tol_scale);
    let mut out = OutputDir::create(&dir)?;
    match opts.command {
        Command::Verify => commands::verify(&cfg, &mut out, &mut report)?,
        Command::Lax => commands::lax_matrix(&cfg, &mut out, &mut report)?,
        Command::Evolve => commands::evolve(&cfg, &mut out, &mut report)?,
        Command::Limit => commands::limit(&cfg, &mut out, &mut report)?,
        Command::Reduce => commands::reduce(&cfg, &mut out, &mut report)?,
    }
    report.files = out.written().to_vec();
    report.files.push("report.json".into());
    out.write_json("report.json", &report)?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}
