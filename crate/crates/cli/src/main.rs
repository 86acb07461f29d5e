//! `serrin`: fit model solutions, solve, verify and sweep scenarios described
//! by a JSON config.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Overrides, ScenarioConfig};

#[derive(Parser)]
#[command(name = "serrin", version, about = "Overdetermined annulus problems: model fits, solves and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    config: PathBuf,
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long)]
    ntheta: Option<usize>,
    /// Perturbation amplitude; adds a mode-3 inner perturbation if the config has none.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Primary output file, overriding the config.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model solution to the boundary data and print it with its case.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Solve the Dirichlet problem and write the field.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Solve and run every applicable check; writes a JSON report and a CSV row.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Treat non-constant Neumann data as the expected outcome.
        #[arg(long)]
        expect_asymmetric: bool,
    },
    /// Run the config's sweep block and write one CSV row per value.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Convergence study against an exact field.
    Mms {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        ns: common.ns,
        ntheta: common.ntheta,
        eps: common.eps,
    });
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SERRIN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| exit::UsageError::new(format!("SERRIN_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Fit { common, json } => commands::fit(&load(&common)?, json),
        Command::Solve { common } => commands::solve(&load(&common)?, &common.output),
        Command::Verify {
            common,
            expect_asymmetric,
        } => commands::verify(&load(&common)?, &common.output, expect_asymmetric),
        Command::Sweep { common } => commands::sweep(&load(&common)?, &common.output),
        Command::Mms { common } => commands::mms(&load(&common)?, &common.output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
