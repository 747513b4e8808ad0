use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::run_traces;
use super::HarnessError;

/// Summary of one grid combination across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    /// Values of the varied keys, in column order.
    pub values: Vec<String>,
    pub min_final_loss: Option<f64>,
    /// Lower median: element `(n - 1) / 2` of the sorted final losses.
    pub median_final_loss: Option<f64>,
    pub diverged_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub columns: Vec<String>,
    pub rows: Vec<GridRow>,
}

/// Lower-interpolation percentile `q` in `[0, 1]` of an unsorted sample.
pub fn lower_percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    Some(sorted[idx])
}

/// Cartesian product of the axes after sorting keys lexicographically. The
/// last key varies fastest; values keep their listed order.
pub fn enumerate_grid(grid: &[(String, Vec<String>)]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut axes: Vec<&(String, Vec<String>)> = grid.iter().collect();
    axes.sort_by(|a, b| a.0.cmp(&b.0));
    let columns = axes.iter().map(|(k, _)| k.clone()).collect();
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for (_, values) in &axes {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    (columns, combos)
}

/// Runs `base` once per grid combination and summarizes final losses.
pub fn grid_search(base: &ExperimentConfig, grid: &[(String, Vec<String>)]) -> Result<GridTable, HarnessError> {
    let mut keys: Vec<&str> = grid.iter().map(|(k, _)| k.as_str()).collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(HarnessError::Config(vec![format!("grid.{}: listed twice", w[0])]));
    }
    let (columns, combos) = enumerate_grid(grid);

    let mut configs = Vec::with_capacity(combos.len());
    let mut errors = Vec::new();
    for combo in &combos {
        let mut cfg = base.clone();
        for (key, value) in columns.iter().zip(combo) {
            if let Err(msg) = cfg.set(key, value) {
                errors.push(format!("grid.{msg}"));
            }
        }
        if let Err(HarnessError::Config(msgs)) = cfg.validate() {
            let label: Vec<String> = columns.iter().zip(combo).map(|(k, v)| format!("{k}={v}")).collect();
            errors.extend(msgs.into_iter().map(|m| format!("[{}] {m}", label.join(", "))));
        }
        configs.push(cfg);
    }
    if !errors.is_empty() {
        errors.dedup();
        return Err(HarnessError::Config(errors));
    }

    let rows = configs
        .par_iter()
        .zip(combos.into_par_iter())
        .map(|(cfg, values)| {
            let traces = run_traces(cfg, false)?;
            let finals: Vec<f64> = traces.iter().filter_map(|t| t.final_loss()).collect();
            Ok(GridRow {
                values,
                min_final_loss: finals.iter().copied().reduce(f64::min),
                median_final_loss: lower_percentile(&finals, 0.5),
                diverged_count: traces.iter().filter(|t| t.diverged()).count(),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(GridTable { columns, rows })
}
