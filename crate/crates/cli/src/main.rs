use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use windbench_cli::checks;
use windbench_cli::config::RunConfig;
use windbench_cli::error::{CliError, Result};
use windbench_cli::evaluate::cmd_evaluate;
use windbench_cli::regress::cmd_regress;
use windbench_cli::report::cmd_report;
use windbench_cli::synth::{write_fixture, FixtureSpec};
use windbench_core::LogBase;

#[derive(Parser)]
#[command(
    name = "windbench",
    version,
    about = "Compare gridded wind datasets against a reference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full evaluation described by a JSON config.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regress each metric column on log grid-point count; prints CSV.
    Regress {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "base10")]
        log_base: LogBase,
    },
    /// Render SVG charts for a completed run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
    /// Check numerical kernels against reference implementations.
    Selftest,
    /// Write a synthetic fixture (grids, turbine files, config.json).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Evaluate { config } => {
            let config = RunConfig::load(&config)?;
            let outcome = cmd_evaluate(&config)?;
            println!("{}", outcome.run_dir.display());
            for (id, e) in &outcome.failures {
                error!("dataset {id} failed: {e}");
            }
            Ok(if outcome.failures.is_empty() { 0 } else { 1 })
        }
        Command::Regress {
            metrics,
            points,
            log_base,
        } => {
            let rows = cmd_regress(&metrics, &points, log_base)?;
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            let io = |e: csv::Error| CliError::csv("<stdout>", e);
            w.write_record([
                "metric",
                "intercept",
                "slope",
                "std_dev",
                "r_squared_percent",
                "p_value",
            ])
            .map_err(io)?;
            for r in rows {
                w.write_record([
                    r.metric,
                    r.intercept.to_string(),
                    r.slope.to_string(),
                    r.std_dev.to_string(),
                    r.r_squared_percent.to_string(),
                    r.p_value.to_string(),
                ])
                .map_err(io)?;
            }
            w.flush().map_err(|e| CliError::io("<stdout>", e))?;
            Ok(0)
        }
        Command::Report { run } => {
            for path in cmd_report(&run)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Selftest => {
            let results = checks::run_all();
            let mut out = std::io::stdout().lock();
            for c in &results {
                let _ = writeln!(out, "{}", c.line());
            }
            Ok(if results.iter().all(|c| c.passed) { 0 } else { 1 })
        }
        Command::Synth { out, seed } => {
            let mut spec = FixtureSpec::default();
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            println!("{}", write_fixture(&out, &spec)?.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
