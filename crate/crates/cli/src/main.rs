use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::parse_config;
use run::{Overrides, RunError};

/// Spectral estimate harness for the planar Dirac operator in a constant magnetic field.
#[derive(Debug, Parser)]
#[command(name = "magdirac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the task described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Basis cache directory (overrides `cache` and MAGDIRAC_CACHE_DIR).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Worker threads; 0 picks the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for random test states (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config, then print it with all defaults filled in.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<config::RunConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Validate { config } => {
            print!("{}", load(&config)?.render());
            Ok(())
        }
        Command::Run {
            config,
            out,
            cache,
            threads,
            seed,
        } => {
            let cfg = load(&config)?;
            let summary = run::run(cfg, &Overrides { out, cache, threads, seed })?;
            println!("wrote {}", summary.csv.display());
            println!("wrote {}", summary.metadata.display());
            println!("basis cache: {}", summary.cache.label());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
