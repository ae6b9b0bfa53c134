//! `greenbound`: config-driven experiments for semilinear Dirichlet problems.
//!
//! Exit codes: 0 when every check passes, 2 on a bound violation or a solver
//! that did not converge, 1 on usage and configuration errors.

mod commands;
mod config;
mod error;
mod expr;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "greenbound", version, about = "Green-operator solves and pointwise bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir` of the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the solution CSV.
    Solve(Common),
    /// Check the sandwich and supersolution bounds nodewise.
    VerifyBounds(Common),
    /// Tabulate theta and phi for the configured nonlinearity.
    PhiTable(Common),
    /// Run consistency checks on the discrete Green operator.
    GreenSelftest(Common),
    /// Run verify-bounds once per value of one config parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config path, e.g. `psi.params.gamma` or `grid.resolution.0`.
        #[arg(long, value_name = "NAME")]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_name = "CSVLIST", value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::config("<document>", e.to_string()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::run_solve(&cfg, &cfg.output_dir(c.out.as_deref()))
        }
        Command::VerifyBounds(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::run_verify_bounds(&cfg, &cfg.output_dir(c.out.as_deref()))
        }
        Command::PhiTable(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::run_phi_table(&cfg, &cfg.output_dir(c.out.as_deref()))
        }
        Command::GreenSelftest(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::run_green_selftest(&cfg, &cfg.output_dir(c.out.as_deref()))
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let doc = read_json(&common.config)?;
            commands::run_sweep(&doc, &param, &values, &cfg.output_dir(common.out.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
