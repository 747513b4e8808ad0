use std::fs::File;
use std::io::BufReader;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{ExperimentConfig, OptimizerKind, ProblemKind};
use super::HarnessError;
use crate::baselines::Baseline;
use crate::diagnostics::{angle_from_gradient, default_profile_grid, sample_line_profile, AngleRecord};
use crate::error::Error;
use crate::linesearch::{degeneracy_threshold, Pal, StepCase};
use crate::problems::{
    make_random_spd, read_dataset, two_blobs, MlpConfig, MlpProblem, QuadraticProblem, StochasticQuadraticFamily,
};
use crate::{LossOracle, Vector};

/// Loss above which a run counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

pub const DIVERGED_LABEL: &str = "diverged";

/// One row of `runs.csv`. Losses and gradient norms are measured after the
/// update, on the same batch and noise draw the update used.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub step: u64,
    pub loss: Option<f64>,
    pub grad_norm: Option<f64>,
    pub s_upd: Option<f64>,
    /// PAL case label, or [`DIVERGED_LABEL`] on the marker row that ends a
    /// diverged run.
    pub case: Option<&'static str>,
    pub angle_deg: Option<f64>,
    pub wall_nanos: Option<u64>,
}

impl RunRecord {
    pub fn is_diverged(&self) -> bool {
        self.case == Some(DIVERGED_LABEL)
    }
}

/// One sampled point of a line profile, tagged with its step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub step: u64,
    pub s: f64,
    pub loss: f64,
    pub fit_a: f64,
    pub fit_b: f64,
    pub fit_c: f64,
}

/// Everything recorded for one seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeedTrace {
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub angles: Vec<AngleRecord>,
    pub profiles: Vec<ProfileRow>,
}

impl SeedTrace {
    pub fn diverged(&self) -> bool {
        self.records.last().is_some_and(RunRecord::is_diverged)
    }

    pub fn final_loss(&self) -> Option<f64> {
        match self.records.last() {
            Some(r) if !r.is_diverged() => r.loss,
            _ => None,
        }
    }
}

/// Problem instance for one seed, with its starting point.
pub fn build_problem(cfg: &ExperimentConfig, seed: u64) -> Result<(Box<dyn LossOracle + Send>, Vector), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let mut gaussian = |n: usize, scale: f64| Vector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    Ok(match cfg.problem {
        ProblemKind::Quadratic => {
            let q = &cfg.quadratic;
            let matrix = make_random_spd(q.dim, q.condition_number, seed)?;
            let problem = QuadraticProblem::new(matrix, Vector::zeros(q.dim), 0.0)?;
            (Box::new(problem), gaussian(q.dim, q.start_scale))
        }
        ProblemKind::StochasticQuadratic => {
            let s = &cfg.stochastic;
            let family = StochasticQuadraticFamily::random(s.dim, s.batches, s.condition_number, s.spread, seed)?;
            (Box::new(family), gaussian(s.dim, s.start_scale))
        }
        ProblemKind::Mlp => {
            let m = &cfg.mlp;
            let data = match &m.dataset {
                Some(path) => read_dataset(BufReader::new(File::open(path)?))?,
                None => two_blobs(m.samples, m.data_seed),
            };
            let inputs = data.first().map_or(2, |s| s.features.len());
            let classes = data.iter().map(|s| s.label + 1).max().unwrap_or(2).max(2);
            let mut layer_dims = vec![inputs];
            layer_dims.extend(&m.hidden);
            layer_dims.push(classes);
            let mlp_cfg = MlpConfig {
                layer_dims,
                activation: m.activation,
                batch_size: m.batch_size,
                noise: m.noise(),
                seed,
            };
            let problem = MlpProblem::new(mlp_cfg, data)?;
            let theta0 = problem.init_params(seed);
            (Box::new(problem), theta0)
        }
    })
}

enum Runner {
    Pal(Pal),
    Baseline(Baseline),
}

impl Runner {
    fn theta(&self) -> &Vector {
        match self {
            Runner::Pal(p) => p.theta(),
            Runner::Baseline(b) => &b.theta,
        }
    }
}

fn diverged_row(seed: u64, step: u64, loss: Option<f64>) -> RunRecord {
    RunRecord {
        seed,
        step,
        loss,
        grad_norm: None,
        s_upd: None,
        case: Some(DIVERGED_LABEL),
        angle_deg: None,
        wall_nanos: None,
    }
}

/// Runs one seed. With `profiles` set, also samples a line profile around
/// every `profile_every`-th PAL step.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, profiles: bool) -> Result<SeedTrace, HarnessError> {
    let (mut oracle, theta0) = build_problem(cfg, seed)?;
    let mut runner = match cfg.baseline() {
        None => Runner::Pal(Pal::new(cfg.pal, theta0)?),
        Some(b) => Runner::Baseline(Baseline::new(b, theta0)?),
    };
    let want_angles = profiles || cfg.record_diagnostics;
    let mut trace = SeedTrace {
        seed,
        ..SeedTrace::default()
    };

    for t in 0..cfg.max_steps {
        let step = t + 1;
        oracle.begin_step(t);
        let theta_before = runner.theta().clone();
        let started = cfg.record_timing.then(Instant::now);
        let outcome = match &mut runner {
            Runner::Pal(p) => p.step(&*oracle).map(Some),
            Runner::Baseline(b) => b.step(&*oracle).map(|_| None),
        };
        let wall_nanos = started.map(|s| s.elapsed().as_nanos() as u64);
        let report = match outcome {
            Ok(r) => r,
            Err(Error::Diverged { loss, .. }) => {
                trace.records.push(diverged_row(seed, step, Some(loss)));
                break;
            }
            Err(e) => return Err(e.into()),
        };

        let theta = runner.theta();
        let post = oracle.value(theta).and_then(|l| Ok((l, oracle.gradient(theta)?)));
        let (loss, grad) = match post {
            Ok((l, g)) if l.is_finite() && l <= DIVERGENCE_LIMIT => (l, g),
            Ok((l, _)) | Err(Error::Diverged { loss: l, .. }) => {
                trace.records.push(diverged_row(seed, step, Some(l)));
                break;
            }
            Err(e) => return Err(e.into()),
        };

        let mut angle_deg = None;
        if let (Some(r), Runner::Pal(pal)) = (&report, &runner) {
            if r.s_upd > 0.0 {
                let direction = pal.state.prev_direction.clone();
                let unit = direction.normalize();
                if want_angles {
                    if let Ok(rec) = angle_from_gradient(&grad, &unit, degeneracy_threshold(theta.norm()), step) {
                        angle_deg = Some(rec.angle_degrees);
                        trace.angles.push(rec);
                    }
                }
                if profiles && t % cfg.profile_every == 0 {
                    let grid = default_profile_grid(r.s_upd, cfg.profile_points);
                    let profile = sample_line_profile(&*oracle, &theta_before, &direction, &grid)?;
                    trace.profiles.extend(profile.s_values.iter().zip(&profile.losses).map(|(&s, &l)| {
                        ProfileRow {
                            step,
                            s,
                            loss: l,
                            fit_a: profile.fitted.a,
                            fit_b: profile.fitted.b,
                            fit_c: profile.fitted.c,
                        }
                    }));
                }
            }
        }

        trace.records.push(RunRecord {
            seed,
            step,
            loss: Some(loss),
            grad_norm: Some(grad.norm()),
            s_upd: report.as_ref().map(|r| r.s_upd),
            case: report.as_ref().map(|r| StepCase::label(r.case)),
            angle_deg,
            wall_nanos,
        });
    }
    Ok(trace)
}

/// Runs every seed (in parallel) and returns their traces in seed order.
pub fn run_traces(cfg: &ExperimentConfig, profiles: bool) -> Result<Vec<SeedTrace>, HarnessError> {
    cfg.validate()?;
    if profiles && cfg.optimizer != OptimizerKind::Pal {
        return Err(HarnessError::Config(vec![format!(
            "optimizer.kind: diagnose needs pal, got {}",
            cfg.optimizer.name()
        )]));
    }
    cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed, profiles)).collect()
}

/// All run records, seed by seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    Ok(run_traces(cfg, false)?.into_iter().flat_map(|t| t.records).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_quadratic_converges_in_one_step() {
        let mut cfg = ExperimentConfig {
            max_steps: 1,
            seeds: vec![1],
            ..ExperimentConfig::default()
        };
        // alpha > 1 deliberately overshoots the vertex, so use the plain step
        cfg.set("optimizer.pal.alpha", "1").unwrap();
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].step, 1);
        assert!(records[0].loss.unwrap() <= 1e-18, "{:?}", records[0]);
    }

    #[test]
    fn zero_steps_is_rejected() {
        let cfg = ExperimentConfig {
            max_steps: 0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn divergence_ends_run_with_marker() {
        let mut cfg = ExperimentConfig {
            max_steps: 50,
            seeds: vec![1, 2],
            optimizer: OptimizerKind::SgdMomentum,
            ..ExperimentConfig::default()
        };
        cfg.set("optimizer.sgd.learning_rate", "5").unwrap();
        cfg.set("optimizer.sgd.momentum", "0").unwrap();
        let traces = run_traces(&cfg, false).unwrap();
        assert_eq!(traces.len(), 2);
        for t in &traces {
            assert!(t.diverged());
            assert!(t.records.len() < 50);
            assert_eq!(t.final_loss(), None);
        }
    }

    #[test]
    fn steps_are_strictly_increasing() {
        let mut cfg = ExperimentConfig {
            max_steps: 20,
            seeds: vec![4],
            record_diagnostics: true,
            ..ExperimentConfig::default()
        };
        cfg.set("problem.kind", "stochastic_quadratic").unwrap();
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 20);
        assert!(records.windows(2).all(|w| w[0].step < w[1].step));
        assert!(records.iter().all(|r| r.wall_nanos.is_none()));
    }

    #[test]
    fn diagnose_requires_pal() {
        let cfg = ExperimentConfig {
            optimizer: OptimizerKind::Adam,
            ..ExperimentConfig::default()
        };
        assert!(run_traces(&cfg, true).is_err());
    }
}
