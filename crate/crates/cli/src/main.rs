//! `wiener-tau`: evaluate KP soliton tau functions and run the verification checks.
//!
//! Exit status: 0 when every check passes, 1 when any fails, 2 on
//! configuration or runtime errors.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Overrides, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "wiener-tau", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration; its `command` must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory for the reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate τ (and optional derivatives) at one point.
    TauEval(Common),
    /// Tabulate u = 2 ∂²ₓ log τ on a grid as CSV.
    Field(Common),
    /// KP or KdV residuals at random points.
    Residual(Common),
    /// Monte Carlo checks of the Wiener-space representations.
    McVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
    /// Determinant identity chain linking τ to the area functional.
    KpsCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, suite) = match cli.command {
        Cmd::TauEval(c) => (Command::TauEval, c, None),
        Cmd::Field(c) => (Command::Field, c, None),
        Cmd::Residual(c) => (Command::Residual, c, None),
        Cmd::McVerify { common, suite } => (Command::McVerify, common, suite),
        Cmd::KpsCheck(c) => (Command::KpsCheck, c, None),
    };
    let overrides = Overrides {
        seed: common.seed,
        samples: common.samples,
        steps: common.steps,
        out: common.out,
        suite,
    };
    let outcomes = RunConfig::resolve(command, common.config.as_deref(), &overrides).and_then(|cfg| run::run(&cfg));
    match outcomes {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Ok(outcomes) => {
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.summary);
            }
            if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
