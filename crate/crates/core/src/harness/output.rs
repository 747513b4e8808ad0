//! CSV emission. Floats use Rust's shortest round-trip scientific notation so
//! identical runs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::grid::GridTable;
use super::run::{ProfileRow, RunRecord};
use super::HarnessError;
use crate::diagnostics::AngleRecord;

pub const RUNS_HEADER: [&str; 8] = ["seed", "step", "loss", "grad_norm", "s_upd", "case", "angle_deg", "wall_nanos"];
pub const PROFILE_HEADER: [&str; 6] = ["step", "s", "loss", "fit_a", "fit_b", "fit_c"];
pub const ANGLES_HEADER: [&str; 3] = ["step", "angle_deg", "grad_norm"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_runs<W: Write>(out: W, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER)?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.step.to_string(),
            opt_f64(r.loss),
            opt_f64(r.grad_norm),
            opt_f64(r.s_upd),
            r.case.unwrap_or_default().to_string(),
            opt_f64(r.angle_deg),
            r.wall_nanos.map(|n| n.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid<W: Write>(out: W, table: &GridTable) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.columns.clone();
    header.extend(["min_final_loss", "median_final_loss", "diverged_count"].map(String::from));
    w.write_record(&header)?;
    for row in &table.rows {
        let mut fields = row.values.clone();
        fields.push(opt_f64(row.min_final_loss));
        fields.push(opt_f64(row.median_final_loss));
        fields.push(row.diverged_count.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profiles<W: Write>(out: W, rows: &[ProfileRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.s),
            fmt_f64(r.loss),
            fmt_f64(r.fit_a),
            fmt_f64(r.fit_b),
            fmt_f64(r.fit_c),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_angles<W: Write>(out: W, rows: &[AngleRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANGLES_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.angle_degrees),
            fmt_f64(r.grad_norm_at_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<csv path>.meta` next to an output file. Timestamps live here,
/// never in the CSV itself.
pub fn write_sidecar(csv_path: &Path, command: &str, config_path: &Path) -> Result<(), HarnessError> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    let mut meta = csv_path.as_os_str().to_owned();
    meta.push(".meta");
    fs::write(
        meta,
        format!(
            "command = {command}\nconfig = {}\ncreated_unix_seconds = {}\nversion = {}\n",
            config_path.display(),
            now.as_secs(),
            env!("CARGO_PKG_VERSION")
        ),
    )?;
    Ok(())
}
