//! Flat `key = value` experiment configuration.
//!
//! Keys are dotted paths such as `optimizer.pal.mu`. Lines starting with `#`
//! are comments. Unknown keys are errors. Keys prefixed with `grid.` list
//! comma-separated values for a grid search over the named key, e.g.
//! `grid.optimizer.pal.mu = 1, 0.1, 0.01`.

use std::path::PathBuf;

use super::HarnessError;
use crate::baselines::BaselineConfig;
use crate::linesearch::HyperParams;
use crate::problems::{Activation, NoiseKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    StochasticQuadratic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Pal,
    SgdMomentum,
    Adam,
    RmsProp,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Pal => "pal",
            OptimizerKind::SgdMomentum => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }
}

/// `f(x) = xᵀQx` with random SPD `Q`, started from a Gaussian point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSettings {
    pub dim: usize,
    pub condition_number: f64,
    pub start_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticQuadraticSettings {
    pub dim: usize,
    pub condition_number: f64,
    pub batches: usize,
    pub spread: f64,
    pub start_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSettings {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    /// 1 disables the noise mask.
    pub keep_prob: f64,
    pub samples: usize,
    pub data_seed: u64,
    /// Read samples from this file instead of generating blobs.
    pub dataset: Option<PathBuf>,
}

impl MlpSettings {
    pub fn noise(&self) -> NoiseKind {
        if self.keep_prob >= 1.0 {
            NoiseKind::None
        } else {
            NoiseKind::MultiplicativeMask {
                keep_prob: self.keep_prob,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub quadratic: QuadraticSettings,
    pub stochastic: StochasticQuadraticSettings,
    pub mlp: MlpSettings,

    pub optimizer: OptimizerKind,
    pub pal: HyperParams,
    pub sgd: BaselineConfig,
    pub adam: BaselineConfig,
    pub rmsprop: BaselineConfig,

    pub max_steps: u64,
    pub seeds: Vec<u64>,
    /// Record the angle between travel direction and post-step gradient.
    pub record_diagnostics: bool,
    /// Fill the `wall_nanos` column. Off by default so output is reproducible.
    pub record_timing: bool,
    pub output_path: PathBuf,

    pub profile_points: usize,
    pub profile_every: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Quadratic,
            quadratic: QuadraticSettings {
                dim: 2,
                condition_number: 1.0,
                start_scale: 1.0,
            },
            stochastic: StochasticQuadraticSettings {
                dim: 2,
                condition_number: 10.0,
                batches: 8,
                spread: 1.0,
                start_scale: 1.0,
            },
            mlp: MlpSettings {
                hidden: vec![16],
                activation: Activation::Relu,
                batch_size: 256,
                keep_prob: 0.8,
                samples: 500,
                data_seed: 0,
                dataset: None,
            },
            optimizer: OptimizerKind::Pal,
            pal: HyperParams::default(),
            sgd: BaselineConfig::sgd(0.1, 0.9),
            adam: BaselineConfig::adam(0.001),
            rmsprop: BaselineConfig::rmsprop(0.001),
            max_steps: 100,
            seeds: vec![1, 2, 3],
            record_diagnostics: false,
            record_timing: false,
            output_path: PathBuf::from("out"),
            profile_points: 50,
            profile_every: 1,
        }
    }
}

/// One `key = value` pair with its source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// A parsed configuration file: the experiment plus any grid axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    /// `(key, values)` in file order.
    pub grid: Vec<(String, Vec<String>)>,
}

fn parse_real(v: &str) -> Result<f64, String> {
    let v = v.trim();
    let parsed = match v.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
            num / den
        }
        None => v.parse().map_err(|_| format!("`{v}` is not a number"))?,
    };
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn parse_int<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a non-negative integer", v.trim()))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(item).collect()
}

/// Parses a comma-separated seed list such as `1,2,3`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>, String> {
    parse_list(v, parse_int)
}

fn set_lr(cfg: &mut BaselineConfig, v: f64) {
    match cfg {
        BaselineConfig::SgdMomentum { learning_rate, .. }
        | BaselineConfig::Adam { learning_rate, .. }
        | BaselineConfig::RmsProp { learning_rate, .. } => *learning_rate = v,
    }
}

impl ExperimentConfig {
    /// Assigns one dotted key. Errors name the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let result = self.set_inner(key, value);
        result.map_err(|e| format!("{key}: {e}"))
    }

    fn set_inner(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "problem.kind" => {
                self.problem = match v.trim() {
                    "quadratic" => ProblemKind::Quadratic,
                    "stochastic_quadratic" => ProblemKind::StochasticQuadratic,
                    "mlp" => ProblemKind::Mlp,
                    other => return Err(format!("unknown problem `{other}`")),
                }
            }
            "problem.quadratic.dim" => self.quadratic.dim = parse_int(v)?,
            "problem.quadratic.condition_number" => self.quadratic.condition_number = parse_real(v)?,
            "problem.quadratic.start_scale" => self.quadratic.start_scale = parse_real(v)?,
            "problem.stochastic_quadratic.dim" => self.stochastic.dim = parse_int(v)?,
            "problem.stochastic_quadratic.condition_number" => self.stochastic.condition_number = parse_real(v)?,
            "problem.stochastic_quadratic.batches" => self.stochastic.batches = parse_int(v)?,
            "problem.stochastic_quadratic.spread" => self.stochastic.spread = parse_real(v)?,
            "problem.stochastic_quadratic.start_scale" => self.stochastic.start_scale = parse_real(v)?,
            "problem.mlp.hidden" => self.mlp.hidden = parse_list(v, parse_int)?,
            "problem.mlp.activation" => {
                self.mlp.activation = match v.trim() {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    other => return Err(format!("unknown activation `{other}`")),
                }
            }
            "problem.mlp.batch_size" => self.mlp.batch_size = parse_int(v)?,
            "problem.mlp.keep_prob" => self.mlp.keep_prob = parse_real(v)?,
            "problem.mlp.samples" => self.mlp.samples = parse_int(v)?,
            "problem.mlp.data_seed" => self.mlp.data_seed = parse_int(v)?,
            "problem.mlp.dataset" => {
                let path = v.trim();
                self.mlp.dataset = (!path.is_empty()).then(|| PathBuf::from(path));
            }

            "optimizer.kind" => {
                self.optimizer = match v.trim() {
                    "pal" => OptimizerKind::Pal,
                    "sgd" => OptimizerKind::SgdMomentum,
                    "adam" => OptimizerKind::Adam,
                    "rmsprop" => OptimizerKind::RmsProp,
                    other => return Err(format!("unknown optimizer `{other}`")),
                }
            }
            "optimizer.pal.mu" => self.pal.mu = parse_real(v)?,
            "optimizer.pal.alpha" => self.pal.alpha = parse_real(v)?,
            "optimizer.pal.beta" => self.pal.beta = parse_real(v)?,
            "optimizer.pal.s_max" => {
                self.pal.s_max = match v.trim() {
                    "inf" | "unbounded" | "none" => None,
                    other => Some(parse_real(other)?),
                }
            }
            "optimizer.sgd.learning_rate" => set_lr(&mut self.sgd, parse_real(v)?),
            "optimizer.sgd.momentum" => {
                let m = parse_real(v)?;
                if let BaselineConfig::SgdMomentum { momentum, .. } = &mut self.sgd {
                    *momentum = m;
                }
            }
            "optimizer.adam.learning_rate" => set_lr(&mut self.adam, parse_real(v)?),
            "optimizer.adam.beta1" | "optimizer.adam.beta2" | "optimizer.adam.epsilon" => {
                let x = parse_real(v)?;
                if let BaselineConfig::Adam {
                    beta1, beta2, epsilon, ..
                } = &mut self.adam
                {
                    match key {
                        "optimizer.adam.beta1" => *beta1 = x,
                        "optimizer.adam.beta2" => *beta2 = x,
                        _ => *epsilon = x,
                    }
                }
            }
            "optimizer.rmsprop.learning_rate" => set_lr(&mut self.rmsprop, parse_real(v)?),
            "optimizer.rmsprop.discounting" | "optimizer.rmsprop.epsilon" => {
                let x = parse_real(v)?;
                if let BaselineConfig::RmsProp {
                    discounting, epsilon, ..
                } = &mut self.rmsprop
                {
                    if key.ends_with("discounting") {
                        *discounting = x;
                    } else {
                        *epsilon = x;
                    }
                }
            }

            "run.max_steps" => self.max_steps = parse_int(v)?,
            "run.seeds" => self.seeds = parse_seeds(v)?,
            "run.record_diagnostics" => self.record_diagnostics = parse_bool(v)?,
            "run.record_timing" => self.record_timing = parse_bool(v)?,
            "run.output" => self.output_path = PathBuf::from(v.trim()),
            "diagnose.profile_points" => self.profile_points = parse_int(v)?,
            "diagnose.profile_every" => self.profile_every = parse_int(v)?,
            _ => return Err("unknown key".to_string()),
        }
        Ok(())
    }

    pub fn baseline(&self) -> Option<BaselineConfig> {
        match self.optimizer {
            OptimizerKind::Pal => None,
            OptimizerKind::SgdMomentum => Some(self.sgd),
            OptimizerKind::Adam => Some(self.adam),
            OptimizerKind::RmsProp => Some(self.rmsprop),
        }
    }

    /// Checks every field that the selected problem and optimizer use and
    /// reports all violations at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errors = Vec::new();
        if self.max_steps == 0 {
            errors.push("run.max_steps: must be at least 1".to_string());
        }
        if self.seeds.is_empty() {
            errors.push("run.seeds: at least one seed is required".to_string());
        }
        let cond = |errors: &mut Vec<String>, key: &str, kappa: f64| {
            if !(kappa >= 1.0) {
                errors.push(format!("{key}: must be >= 1, got {kappa}"));
            }
        };
        match self.problem {
            ProblemKind::Quadratic => {
                let q = &self.quadratic;
                if q.dim == 0 || q.dim > 200 {
                    errors.push(format!("problem.quadratic.dim: must lie in [1, 200], got {}", q.dim));
                }
                cond(&mut errors, "problem.quadratic.condition_number", q.condition_number);
            }
            ProblemKind::StochasticQuadratic => {
                let s = &self.stochastic;
                if s.dim == 0 || s.dim > 200 {
                    errors.push(format!(
                        "problem.stochastic_quadratic.dim: must lie in [1, 200], got {}",
                        s.dim
                    ));
                }
                if s.batches == 0 {
                    errors.push("problem.stochastic_quadratic.batches: must be at least 1".to_string());
                }
                cond(&mut errors, "problem.stochastic_quadratic.condition_number", s.condition_number);
            }
            ProblemKind::Mlp => {
                let m = &self.mlp;
                if m.hidden.contains(&0) {
                    errors.push("problem.mlp.hidden: widths must be positive".to_string());
                }
                if !(m.keep_prob > 0.0 && m.keep_prob <= 1.0) {
                    errors.push(format!("problem.mlp.keep_prob: must lie in (0, 1], got {}", m.keep_prob));
                }
                if m.batch_size == 0 {
                    errors.push("problem.mlp.batch_size: must be at least 1".to_string());
                }
                if m.dataset.is_none() && m.batch_size > m.samples {
                    errors.push(format!(
                        "problem.mlp.batch_size: {} exceeds problem.mlp.samples = {}",
                        m.batch_size, m.samples
                    ));
                }
            }
        }
        match self.baseline() {
            None => {
                if let Err(e) = self.pal.validate() {
                    errors.push(format!("optimizer.pal: {}", strip_prefix(&e.to_string())));
                }
            }
            Some(b) => {
                if let Err(e) = b.validate() {
                    errors.push(format!("optimizer.{}: {}", b.name(), strip_prefix(&e.to_string())));
                }
            }
        }
        if self.profile_every == 0 {
            errors.push("diagnose.profile_every: must be at least 1".to_string());
        }
        if self.profile_points < 2 {
            errors.push("diagnose.profile_points: must be at least 2".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(errors))
        }
    }
}

fn strip_prefix(msg: &str) -> &str {
    msg.strip_prefix("invalid argument: ").unwrap_or(msg)
}

/// Splits text into entries, rejecting lines without `=` and repeated keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, HarnessError> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                let key = k.trim().to_string();
                if entries.iter().any(|e| e.key == key) {
                    errors.push(format!("line {}: duplicate key `{key}`", i + 1));
                    continue;
                }
                entries.push(Entry {
                    line: i + 1,
                    key,
                    value: v.trim().to_string(),
                });
            }
            _ => errors.push(format!("line {}: expected `key = value`", i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(HarnessError::Config(errors))
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let entries = parse_entries(text)?;
        let mut experiment = ExperimentConfig::default();
        let mut grid = Vec::new();
        let mut errors = Vec::new();
        for e in &entries {
            if let Some(target) = e.key.strip_prefix("grid.") {
                let values: Vec<String> = e
                    .value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if values.is_empty() {
                    errors.push(format!("line {}: {}: no values", e.line, e.key));
                    continue;
                }
                let mut probe = ExperimentConfig::default();
                for v in &values {
                    if let Err(msg) = probe.set(target, v) {
                        errors.push(format!("line {}: grid.{msg}", e.line));
                        break;
                    }
                }
                grid.push((target.to_string(), values));
            } else if let Err(msg) = experiment.set(&e.key, &e.value) {
                errors.push(format!("line {}: {msg}", e.line));
            }
        }
        if errors.is_empty() {
            Ok(ConfigFile { experiment, grid })
        } else {
            Err(HarnessError::Config(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys() {
        let text = "
            # comment
            problem.kind = mlp
            problem.mlp.hidden = 8, 8
            optimizer.kind = pal
            optimizer.pal.mu = 0.01
            optimizer.pal.alpha = 1/0.6
            optimizer.pal.s_max = inf
            run.seeds = 4,5
            run.max_steps = 7
        ";
        let cfg = ConfigFile::parse(text).unwrap().experiment;
        assert_eq!(cfg.problem, ProblemKind::Mlp);
        assert_eq!(cfg.mlp.hidden, vec![8, 8]);
        assert_eq!(cfg.pal.mu, 0.01);
        assert_eq!(cfg.pal.alpha, 1.0 / 0.6);
        assert_eq!(cfg.pal.s_max, None);
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(cfg.max_steps, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = ConfigFile::parse("optimizer.pal.gamma = 1\nrun.bogus = 2\n").unwrap_err();
        let HarnessError::Config(msgs) = err else { panic!() };
        assert_eq!(msgs.len(), 2);
        assert!(msgs[0].contains("optimizer.pal.gamma"));
    }

    #[test]
    fn validation_lists_every_violation() {
        let text = "run.max_steps = 0\noptimizer.pal.mu = -1\noptimizer.pal.beta = 2\nrun.seeds = \n";
        let cfg = ConfigFile::parse(text).unwrap().experiment;
        let HarnessError::Config(msgs) = cfg.validate().unwrap_err() else { panic!() };
        let all = msgs.join("\n");
        assert!(all.contains("run.max_steps"), "{all}");
        assert!(all.contains("run.seeds"), "{all}");
        assert!(all.contains("mu") && all.contains("beta"), "{all}");
    }

    #[test]
    fn grid_axes_are_checked() {
        let file = ConfigFile::parse("grid.optimizer.pal.mu = 1, 0.1\ngrid.optimizer.sgd.momentum = 0.9").unwrap();
        assert_eq!(file.grid.len(), 2);
        assert_eq!(file.grid[0].1, vec!["1", "0.1"]);
        assert!(ConfigFile::parse("grid.optimizer.pal.nope = 1").is_err());
        assert!(ConfigFile::parse("grid.optimizer.pal.mu = 1, x").is_err());
        assert!(ConfigFile::parse("grid.optimizer.pal.mu = ").is_err());
    }

    #[test]
    fn malformed_lines_and_duplicates() {
        assert!(ConfigFile::parse("just text").is_err());
        assert!(ConfigFile::parse("run.max_steps = 1\nrun.max_steps = 2").is_err());
        assert!(ConfigFile::parse("run.max_steps = -1").is_err());
        assert!(ConfigFile::parse("run.record_diagnostics = maybe").is_err());
    }
}
