//! The three subcommands, independent of argument parsing.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::ConfigFile;
use super::grid::grid_search;
use super::output::{write_angles, write_grid, write_profiles, write_runs, write_sidecar};
use super::run::run_traces;
use super::HarnessError;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
}

fn load(config_path: &Path, overrides: &Overrides) -> Result<ConfigFile, HarnessError> {
    let text = fs::read_to_string(config_path)?;
    let mut file = ConfigFile::parse(&text)?;
    if let Some(out) = &overrides.output {
        file.experiment.output_path = out.clone();
    }
    if let Some(seeds) = &overrides.seeds {
        file.experiment.seeds = seeds.clone();
    }
    fs::create_dir_all(&file.experiment.output_path)?;
    Ok(file)
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `run`: writes `runs.csv`. Returns the files written.
pub fn run_command(config_path: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>, HarnessError> {
    let file = load(config_path, overrides)?;
    if !file.grid.is_empty() {
        return Err(HarnessError::Config(vec!["grid.* keys are only allowed with `grid`".into()]));
    }
    let cfg = &file.experiment;
    let traces = run_traces(cfg, false)?;
    let records: Vec<_> = traces.into_iter().flat_map(|t| t.records).collect();
    let path = cfg.output_path.join("runs.csv");
    write_runs(create(&path)?, &records)?;
    write_sidecar(&path, "run", config_path)?;
    Ok(vec![path])
}

/// `grid`: writes `grid.csv`.
pub fn grid_command(config_path: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>, HarnessError> {
    let file = load(config_path, overrides)?;
    let table = grid_search(&file.experiment, &file.grid)?;
    let path = file.experiment.output_path.join("grid.csv");
    write_grid(create(&path)?, &table)?;
    write_sidecar(&path, "grid", config_path)?;
    Ok(vec![path])
}

/// `diagnose`: writes `runs.csv` with angles, and `seed-<k>/profile.csv`
/// plus `seed-<k>/angles.csv` for every seed.
pub fn diagnose_command(config_path: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>, HarnessError> {
    let mut file = load(config_path, overrides)?;
    if !file.grid.is_empty() {
        return Err(HarnessError::Config(vec!["grid.* keys are only allowed with `grid`".into()]));
    }
    file.experiment.record_diagnostics = true;
    let cfg = &file.experiment;
    let traces = run_traces(cfg, true)?;

    let mut written = Vec::new();
    for trace in &traces {
        let dir = cfg.output_path.join(format!("seed-{}", trace.seed));
        fs::create_dir_all(&dir)?;
        let profile = dir.join("profile.csv");
        write_profiles(create(&profile)?, &trace.profiles)?;
        let angles = dir.join("angles.csv");
        write_angles(create(&angles)?, &trace.angles)?;
        written.extend([profile, angles]);
    }
    let records: Vec<_> = traces.into_iter().flat_map(|t| t.records).collect();
    let runs = cfg.output_path.join("runs.csv");
    write_runs(create(&runs)?, &records)?;
    write_sidecar(&runs, "diagnose", config_path)?;
    written.push(runs);
    Ok(written)
}
