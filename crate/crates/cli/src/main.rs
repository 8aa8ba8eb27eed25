use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecnv::config::RunConfig;
use ecnv::error::CliError;
use ecnv::runner;

#[derive(Parser)]
#[command(
    name = "ecnv",
    about = "Pseudo-spectral simulator for stochastically forced electroconvection on the 2D torus",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides rng.seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a single path, writing norms (and enabled budget residuals)
    /// to the diagnostics CSV.
    Run(CommonArgs),
    /// Simulate ensemble.paths independent paths in parallel and merge the
    /// outputs in path order.
    Ensemble(CommonArgs),
    /// Budget dt-halving study, pathwise continuity bound, commutator corpus.
    Diagnose(CommonArgs),
    /// Krylov-Bogoliubov averages, kernel estimates, tightness scan, Feller
    /// probe (zero-potential system).
    Measure(CommonArgs),
    /// Built-in operator and oracle checks; nonzero exit on failure.
    Selftest {
        /// Accepted for interface uniformity; the checks are self-contained.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::parse_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run(common) => {
            let cfg = load(&common)?;
            runner::cmd_run(&cfg, &cfg.out_dir.clone())
        }
        Cmd::Ensemble(common) => {
            let cfg = load(&common)?;
            runner::cmd_ensemble(&cfg, &cfg.out_dir.clone())
        }
        Cmd::Diagnose(common) => {
            let cfg = load(&common)?;
            runner::cmd_diagnose(&cfg, &cfg.out_dir.clone())
        }
        Cmd::Measure(common) => {
            let cfg = load(&common)?;
            runner::cmd_measure(&cfg, &cfg.out_dir.clone())
        }
        Cmd::Selftest { .. } => runner::cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: category={}: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
