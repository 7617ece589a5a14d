use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rslax::config::Command;
use rslax::output::Status;
use rslax::{run, RunOptions};

#[derive(Parser)]
#[command(
    name = "rslax",
    version,
    about = "Elliptic Ruijsenaars-Schneider Lax matrices: checks and experiments"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RSLAX_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("RSLAX_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let opts = RunOptions {
        command: cli.command,
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        tol_scale: cli.tol_scale,
    };
    match run(&opts) {
        Ok(report) => {
            for row in &report.checks {
                let status = match row.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                };
                let detail = row.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default();
                println!(
                    "{status}  {:<32} residual {:<24e} tol {:e}{detail}",
                    row.name, row.residual, row.tolerance
                );
            }
            let passed = report.checks.iter().filter(|r| r.passed()).count();
            println!(
                "{passed}/{} checks passed in {:.2} s",
                report.checks.len(),
                report.wall_time_s
            );
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
