//! `stokes-summa`: classification, summation and Stokes jumps for
//! `∂_t u = a (∂_t t)^p t^q ∂_z^r u` from the command line.
//!
//! ```text
//! stokes-summa jump --config euler.json --format csv --out jump.csv
//! ```
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when a numerical
//! procedure misses its accuracy target (or a `verify` check fails).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Command, Format, Overrides, RunConfig};

const TOOL: &str = "stokes-summa";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "stokes-summa", version, about = "Moment Borel-Laplace summation and Stokes jumps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run config (JSON); defaults to the Euler problem p = 2, q = r = 0, a = 1, φ = 1.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Absolute and relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Lateral offset for `jump` (clamped to a third of the line spacing).
    #[arg(long, global = true)]
    eps: Option<f64>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for per-sample parallelism.
    #[arg(long, global = true, env = "STOKES_SUMMA_THREADS", hide_env_values = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Regime, summability index and singular directions.
    Classify,
    /// Sums u^d(t, z) on a grid of t.
    Sum,
    /// Stokes and anti-Stokes lines.
    Stokes,
    /// Jump across one Stokes line by every available route.
    Jump,
    /// Invariant suites with measured deviations.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Classify => Command::Classify,
            Cmd::Sum => Command::Sum,
            Cmd::Stokes => Command::Stokes,
            Cmd::Jump => Command::Jump,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<stokes_summa::Error>() {
        Some(err) if err.is_numerical() => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(stokes_summa::Error::Validation("STOKES_SUMMA_THREADS must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::euler(),
    };
    let overrides = Overrides {
        tol: cli.tol,
        eps: cli.eps,
        out: cli.out.clone(),
        format: cli.format,
    };
    let resolved = config::resolve(cfg, cli.command.into(), &overrides)?;
    let outcome = commands::run(&resolved)?;
    let text = match resolved.format {
        Format::Json => output::to_json(&json!({
            "tool": TOOL,
            "version": VERSION,
            "config": serde_json::to_value(&resolved)?,
            "result": outcome.result,
        })),
        Format::Csv => {
            let config = serde_json::to_string(&serde_json::to_value(&resolved)?)?;
            output::to_csv(
                &[("tool", TOOL.into()), ("version", VERSION.into()), ("config", config)],
                &outcome.table,
            )
        }
    };
    match &resolved.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if outcome.failures > 0 {
        eprintln!("{TOOL}: {} verification check(s) failed", outcome.failures);
        return Ok(2);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{TOOL}: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
