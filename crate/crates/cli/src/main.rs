mod commands;
mod config;
mod exit;
mod oracle;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::exit::ExitStatus;

/// Numerical experiments with induced Hausdorff metric flows on Lie groups.
///
/// Exit codes: 0 success (flow converged), 1 error, 2 usage error,
/// 3 flow diverged, 4 iteration cap reached, 5 a verified property failed.
#[derive(Parser, Debug)]
#[command(name = "hausflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args, Debug)]
struct RunFlags {
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides the seed in the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate the flow and write report.json plus one CSV per retained iterate.
    Run(Common),
    /// Check metric, monotonicity, bound, midpoint, invariance and norm properties.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Only check the metric axioms of this CSV field on the configured grid.
        #[arg(long, value_name = "CSV")]
        field: Option<PathBuf>,
    },
    /// Word clouds, covering radii and the generator certificate.
    Semigroup(Common),
    /// Difference-quotient norm estimates.
    Finsler(Common),
    /// Regenerate reference values into <out>/oracle/.
    Oracle {
        /// Case name, or `all`.
        #[arg(long, default_value = "all")]
        case: String,
        #[command(flatten)]
        run: RunFlags,
    },
}

fn setup(flags: &RunFlags) -> Result<()> {
    if let Some(n) = flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.run.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Run(c) => {
            setup(&c.run)?;
            commands::cmd_run(load(&c)?, &c.run.out)
        }
        Command::Verify { common, field } => {
            setup(&common.run)?;
            commands::cmd_verify(load(&common)?, &common.run.out, field.as_deref())
        }
        Command::Semigroup(c) => {
            setup(&c.run)?;
            commands::cmd_semigroup(load(&c)?, &c.run.out)
        }
        Command::Finsler(c) => {
            setup(&c.run)?;
            commands::cmd_finsler(load(&c)?, &c.run.out)
        }
        Command::Oracle { case, run } => {
            setup(&run)?;
            for p in oracle::write(&case, Path::new(&run.out))? {
                println!("{p}");
            }
            Ok(ExitStatus::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let status = if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Ok
            };
            return ExitCode::from(status.code() as u8);
        }
    };
    let status = match dispatch(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitStatus::Error
        }
    };
    ExitCode::from(status.code() as u8)
}
