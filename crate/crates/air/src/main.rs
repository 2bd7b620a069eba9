//! Thin command-line front end over the library: `run`, `gen-features` and
//! `inspect`. Exit codes: 0 success, 2 config error, 3 scenario/guard
//! violation, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use air::config::RunConfig;
use air::run::{cmd_gen_features, cmd_inspect, cmd_run};

#[derive(Parser)]
#[command(
    name = "air",
    about = "Imbalance-rectified analytic continual learning runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment end to end and write JSON reports
    Run {
        /// Experiment configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's seed list with this single seed
        #[arg(long)]
        seed_override: Option<u64>,
        /// Output directory (default: the config's output_dir, or "air-out")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress progress output
        #[arg(long)]
        quiet: bool,
    },
    /// Generate the configured synthetic features as an AIRF file
    GenFeatures {
        /// Experiment configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Seed to generate with (default: the config's first seed)
        #[arg(long)]
        seed_override: Option<u64>,
        /// Output directory for features.airf (default as for run)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress progress output
        #[arg(long)]
        quiet: bool,
    },
    /// Summarize a JSON evaluation report
    Inspect {
        /// Path to a seed_<n>.json report
        report: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("air-out"))
}

fn apply_seed_override(config: &mut RunConfig, seed_override: Option<u64>) {
    if let Some(seed) = seed_override {
        config.seeds = vec![seed];
    }
}

fn real_main() -> air::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed_override,
            out,
            quiet,
        } => {
            let mut config = RunConfig::from_path(&config)?;
            apply_seed_override(&mut config, seed_override);
            let dir = out_dir(out, &config);
            let artifacts = cmd_run(&config, &dir, quiet)?;
            if !quiet {
                println!("wrote {}", artifacts.aggregate_path.display());
            }
        }
        Command::GenFeatures {
            config,
            seed_override,
            out,
            quiet,
        } => {
            let config = RunConfig::from_path(&config)?;
            let dir = out_dir(out, &config);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("features.airf");
            let (path, count) = cmd_gen_features(&config, &path, seed_override)?;
            if !quiet {
                println!("wrote {count} features to {}", path.display());
            }
        }
        Command::Inspect { report } => {
            print!("{}", cmd_inspect(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
