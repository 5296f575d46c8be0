//! `pd` - experiment runner for the policy distillation toolkit.
//!
//! Usage: `pd <preset> [--config <file>] [--seed <u64>] [--out <dir>]`
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pd_core::harness::{parse_config, run, ExperimentConfig, Preset};

#[derive(Parser, Debug)]
#[command(
    name = "pd",
    about = "Train DQN teachers on toy pixel games and distill their policies into student networks",
    after_help = "Presets: train-teacher, loss-compare, compress, multi-distill, multi-dqn, \
                  online, eval-only, param-count.\n\
                  The PD_THREADS environment variable caps evaluation parallelism."
)]
struct Args {
    /// Experiment preset to run.
    preset: String,

    /// Config file (flat `key = value` sections); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file's `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; overrides the config file's `[run] out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &Args) -> pd_core::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?),
        None => Ok(ExperimentConfig::default()),
    }?;
    config.preset = Preset::parse(&args.preset)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("pd: configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&config) {
        Ok(output) => {
            println!("run {} complete: artifacts in {}", output.run_id, output.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) if e.is_config_error() => {
            eprintln!("pd: configuration error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("pd: run failed: {e}");
            ExitCode::from(2)
        }
    }
}
