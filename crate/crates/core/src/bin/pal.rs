use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pal_core::harness::commands::{diagnose_command, grid_command, run_command, Overrides};
use pal_core::harness::config::parse_seeds;

#[derive(Parser)]
#[command(name = "pal", version, about = "Parabolic approximation line search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides `run.output`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Comma-separated seeds (overrides `run.seeds`).
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration for every seed and write runs.csv.
    Run { config: PathBuf },
    /// Run every combination of the config's grid.* axes and write grid.csv.
    Grid { config: PathBuf },
    /// Run PAL and write line profiles and angle records per seed.
    Diagnose { config: PathBuf },
}

fn parse_seed_list(s: &str) -> Result<Vec<u64>, String> {
    let seeds = parse_seeds(s)?;
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seeds = match cli.seeds.as_deref().map(parse_seed_list).transpose() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: --seeds: {e}");
            return ExitCode::FAILURE;
        }
    };
    let overrides = Overrides {
        output: cli.output,
        seeds,
    };
    let result = match &cli.command {
        Command::Run { config } => run_command(config, &overrides),
        Command::Grid { config } => grid_command(config, &overrides),
        Command::Diagnose { config } => diagnose_command(config, &overrides),
    };
    match result {
        Ok(files) => {
            if !cli.quiet {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
