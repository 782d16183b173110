//! `semiwave` command-line driver.
//!
//! Exit status: 0 when every enabled check passes, 1 when a check fails,
//! 2 for configuration, usage or I/O errors.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "semiwave", version, about = "Damped semilinear wave solver with data cutting and cone patching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (flat `key = value` file)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads for patch solves and sweeps
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Output directory; overrides `output.dir`
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single-domain solve with energy ledger and verification
    Run(Common),
    /// Cut the data, solve every patch and assemble the global solution
    PatchRun(Common),
    /// Re-run the checks on a stored run directory
    Verify {
        #[command(flatten)]
        common: Common,
        /// Directory written by `run` or `patch-run`
        run_dir: PathBuf,
    },
    /// Survival / blow-up sweep over the (p, m) plane
    Sweep(Common),
    /// Choose the cutting radius and report the bounds on every centre
    CutDemo(Common),
}

fn out_dir(common: &Common, cfg: &RunConfig, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}

fn setup(common: &Common) -> Result<RunConfig> {
    let cfg = RunConfig::from_file(&common.config)?;
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(commands::Report, bool)> {
    let (common, report) = match &cli.command {
        Command::Run(c) => {
            let cfg = setup(c)?;
            (c, commands::run(&cfg, &out_dir(c, &cfg, "semiwave-run"))?)
        }
        Command::PatchRun(c) => {
            let cfg = setup(c)?;
            (c, commands::patch_run(&cfg, &out_dir(c, &cfg, "semiwave-patch-run"))?)
        }
        Command::Verify { common, run_dir } => {
            let cfg = setup(common)?;
            (common, commands::verify(&cfg, run_dir, common.out.as_deref().map(Path::new))?)
        }
        Command::Sweep(c) => {
            let cfg = setup(c)?;
            (c, commands::sweep(&cfg, &out_dir(c, &cfg, "semiwave-sweep"))?)
        }
        Command::CutDemo(c) => {
            let cfg = setup(c)?;
            (c, commands::cut_demo(&cfg, &out_dir(c, &cfg, "semiwave-cut-demo"))?)
        }
    };
    Ok((report, common.quiet))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok((report, quiet)) => {
            if !quiet {
                print!("{}", report.summary);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
