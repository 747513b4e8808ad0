//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.
//!
//! Each criterion has a wall-clock budget; exceeding it is a failure.

use std::cell::{Cell, RefCell};
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use pal_core::diagnostics::angle_at_estimated_minimum;
use pal_core::harness::{run_traces, ExperimentConfig};
use pal_core::linesearch::{fit_parabola, pal_step, HyperParams, OptimizerState, Pal, StepCase};
use pal_core::problems::{
    family_mean_argmin, make_random_spd, Activation, two_blobs, MlpConfig, MlpProblem, NoiseDraw, NoiseKind, QuadraticProblem,
    StochasticQuadraticFamily,
};
use pal_core::baselines::{Baseline, BaselineConfig};
use pal_core::{LossOracle, Result as PalResult, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;

/// Id, name, check and wall-clock budget.
type Criterion = (&'static str, &'static str, fn() -> Check, Duration);

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn log_uniform(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    (rng.random::<f64>() * hi.ln()).exp()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_one_step_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [2, 10, 50] {
        for mu in [0.01, 0.1, 1.0] {
            for _ in 0..12 {
                let center = gaussian(&mut rng, n) * 3.0;
                let problem = QuadraticProblem::shifted_isotropic(&center);
                let theta0 = gaussian(&mut rng, n) * 3.0;
                let mut state = OptimizerState::new(theta0.clone());
                pal_step(&problem, &mut state, &HyperParams::basic(mu)).map_err(|e| e.to_string())?;
                let ratio = (&state.theta - &center).norm() / (&theta0 - &center).norm();
                worst = worst.max(ratio);
                count += 1;
            }
        }
    }
    ensure(count >= 100 && worst <= 1e-8, || format!("worst ratio {worst:e} over {count} starts"))?;
    Ok(format!("{count} starts, worst ||θ1-x*||/||θ0-x*|| = {worst:.2e}"))
}

fn c2_convergence_on_spd_quadratics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut max_steps_used = 0;
    for k in 0..20u64 {
        let n = rng.random_range(2..=50);
        let kappa = log_uniform(&mut rng, 1e3);
        let q = make_random_spd(n, kappa, 1000 + k).map_err(|e| e.to_string())?;
        let problem = QuadraticProblem::new(q, Vector::zeros(n), 0.0).map_err(|e| e.to_string())?;
        let theta0 = gaussian(&mut rng, n);
        let f0 = problem.value(&theta0).unwrap();
        let g0 = problem.gradient(&theta0).unwrap().norm();
        let mut state = OptimizerState::new(theta0);
        let hp = HyperParams::basic(0.1);
        let mut f_prev = f0;
        let mut decrement_sum = 0.0;
        let mut converged = false;
        for t in 1..=10_000 {
            let r = pal_step(&problem, &mut state, &hp).map_err(|e| e.to_string())?;
            let decrement = r.b * r.b / (4.0 * r.a);
            ensure(r.case == StepCase::MinimumFound && decrement > 0.0, || {
                format!("problem {k} step {t}: case {:?}, decrement {decrement:e}", r.case)
            })?;
            decrement_sum += decrement;
            ensure(decrement_sum <= f0 * (1.0 + 1e-12), || {
                format!("problem {k} step {t}: decrement sum {decrement_sum:e} exceeds f0 {f0:e}")
            })?;
            let f = problem.value(&state.theta).unwrap();
            ensure(f < f_prev, || format!("problem {k} (n={n}, κ={kappa:.1}) step {t}: f {f:e} >= {f_prev:e}"))?;
            f_prev = f;
            if problem.gradient(&state.theta).unwrap().norm() <= 1e-6 * g0 {
                max_steps_used = max_steps_used.max(t);
                converged = true;
                break;
            }
        }
        ensure(converged, || format!("problem {k} (n={n}, κ={kappa:.1}) did not converge in 10000 steps"))?;
    }
    Ok(format!("20 problems converged, slowest took {max_steps_used} steps"))
}

fn c3_family_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = rng.random_range(1..=20);
        let batches = rng.random_range(1..=16);
        let kappa = log_uniform(&mut rng, 1e3);
        let fam = StochasticQuadraticFamily::random(n, batches, kappa, 2.0, 3000 + k).map_err(|e| e.to_string())?;
        let m = family_mean_argmin(&fam);
        let rel = (&m.analytic - &m.averaged).norm() / m.analytic.norm();
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-10, || format!("worst relative gap {worst:e}"))?;
    Ok(format!("20 families, worst relative gap {worst:.2e}"))
}

fn c4_parabolicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let n = rng.random_range(1..=20);
        let q = make_random_spd(n, log_uniform(&mut rng, 1e3), 4000 + k).map_err(|e| e.to_string())?;
        let r = gaussian(&mut rng, n);
        // pick c so the minimum value is 1 and every value is >= 1
        let tmp = QuadraticProblem::new(q.clone(), r.clone(), 0.0).unwrap();
        let x_star = tmp.argmin();
        let c = 1.0 - tmp.value(&x_star).unwrap();
        let problem = QuadraticProblem::new(q, r, c).unwrap();

        let x = gaussian(&mut rng, n);
        let d = gaussian(&mut rng, n).normalize();
        let mu = log_uniform(&mut rng, 100.0) * 0.01;
        let line = |s: f64| problem.value(&(&x + &d * s)).unwrap();
        let slope = problem.gradient(&x).unwrap().dot(&d);
        let fit = fit_parabola(line(0.0), slope, line(mu), mu).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let s = rng.random_range(-5.0..5.0);
            let truth = line(s);
            worst = worst.max((fit.eval(s) - truth).abs() / truth.abs());
        }
    }
    ensure(worst <= 1e-8, || format!("worst relative prediction error {worst:e}"))?;
    Ok(format!("50 triples x 20 points, worst relative error {worst:.2e}"))
}

fn mlp_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("problem.kind", "mlp").unwrap();
    cfg
}

fn c5_angles() -> Check {
    // (a) exact quadratics, plain PAL
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_dev: f64 = 0.0;
    let mut measured = 0;
    for k in 0..10u64 {
        let n = rng.random_range(2..=30);
        let q = make_random_spd(n, log_uniform(&mut rng, 1e3), 5000 + k).map_err(|e| e.to_string())?;
        let problem = QuadraticProblem::new(q, gaussian(&mut rng, n), 0.5).unwrap();
        let mut pal = Pal::new(HyperParams::basic(0.1), gaussian(&mut rng, n) * 2.0).unwrap();
        for _ in 0..30 {
            let report = pal.step(&problem).map_err(|e| e.to_string())?;
            if report.s_upd == 0.0 {
                break;
            }
            let dir = pal.state.prev_direction.clone();
            match angle_at_estimated_minimum(&problem, pal.theta(), &dir, pal.state.t) {
                Ok(rec) => {
                    // stop once the gradient is within rounding of the minimum
                    if rec.grad_norm_at_estimate < 1e-7 {
                        break;
                    }
                    worst_dev = worst_dev.max((rec.angle_degrees - 90.0).abs());
                    measured += 1;
                }
                Err(_) => break,
            }
        }
    }
    ensure(worst_dev <= 0.01, || format!("quadratic angle deviates by {worst_dev:e}°"))?;

    // (b) synthetic MLP, PAL defaults
    let cfg = ExperimentConfig {
        max_steps: 500,
        record_diagnostics: true,
        ..mlp_config()
    };
    let traces = run_traces(&cfg, false).map_err(|e| e.to_string())?;
    let mut medians = Vec::new();
    for t in &traces {
        let mut angles: Vec<f64> = t.records.iter().filter_map(|r| r.angle_deg).collect();
        ensure(angles.len() >= 400, || format!("seed {}: only {} angles", t.seed, angles.len()))?;
        angles.sort_by(f64::total_cmp);
        let median = angles[(angles.len() - 1) / 2];
        ensure((80.0..=100.0).contains(&median), || format!("seed {}: median angle {median:.2}°", t.seed))?;
        medians.push(format!("{median:.2}"));
    }
    Ok(format!(
        "quadratics: {measured} steps within {worst_dev:.1e}° of 90°; MLP median angles [{}]°",
        medians.join(", ")
    ))
}

fn c6_gradient_check() -> Check {
    let h = 1e-5;
    let mut summary = Vec::new();
    for activation in [Activation::Tanh, Activation::Relu] {
        let cfg = MlpConfig {
            layer_dims: vec![2, 4, 2],
            activation,
            batch_size: 16,
            noise: NoiseKind::MultiplicativeMask { keep_prob: 0.8 },
            seed: 6,
        };
        let mut mlp = MlpProblem::new(cfg, two_blobs(64, 6)).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let mut worst: f64 = 0.0;
        for draw in 0..10u64 {
            mlp.begin_step(draw);
            let theta = gaussian(&mut rng, mlp.num_params());
            let grad = mlp.gradient(&theta).map_err(|e| e.to_string())?;
            let fd = Vector::from_fn(theta.len(), |k, _| {
                let (mut plus, mut minus) = (theta.clone(), theta.clone());
                plus[k] += h;
                minus[k] -= h;
                (mlp.value(&plus).unwrap() - mlp.value(&minus).unwrap()) / (2.0 * h)
            });
            worst = worst.max((&grad - &fd).norm() / grad.norm().max(fd.norm()));
        }
        ensure(worst <= 1e-5, || format!("{activation:?}: worst relative error {worst:e}"))?;
        summary.push(format!("{activation:?} {worst:.2e}"));
    }
    Ok(format!("10 draws per activation, worst relative error: {}", summary.join(", ")))
}

/// `f(x) = -||x||²`: every line through a nonzero point is concave.
struct Concave;

impl LossOracle for Concave {
    fn dimension(&self) -> usize {
        2
    }
    fn begin_step(&mut self, _: u64) {}
    fn value(&self, theta: &Vector) -> PalResult<f64> {
        Ok(-theta.norm_squared())
    }
    fn gradient(&self, theta: &Vector) -> PalResult<Vector> {
        Ok(theta * -2.0)
    }
}

fn c7_case_discrimination() -> Check {
    let hp = HyperParams::default();
    let mut state = OptimizerState::new(Vector::from_vec(vec![1.0, 0.5]));
    let r = pal_step(&Concave, &mut state, &hp).map_err(|e| e.to_string())?;
    ensure(r.case == StepCase::ConcaveOrLinear && r.s_upd == hp.mu, || {
        format!("concave line gave {:?} with s_upd {}", r.case, r.s_upd)
    })?;

    let problem = QuadraticProblem::new(DMatrix::from_diagonal_element(3, 3, 2.0), Vector::zeros(3), 1.0).unwrap();
    let start = Vector::zeros(3);
    let mut state = OptimizerState::new(start.clone());
    let r = pal_step(&problem, &mut state, &hp).map_err(|e| e.to_string())?;
    ensure(r.case == StepCase::Extremum && r.s_upd == 0.0 && state.theta == start, || {
        format!("stationary start gave {:?}, s_upd {}, θ {}", r.case, r.s_upd, state.theta)
    })?;
    Ok("concave → concave_or_linear with s_upd = μ; stationary → extremum, θ unchanged".into())
}

/// Counts evaluations and records the noise each value call observed.
struct Recording {
    inner: MlpProblem,
    values: Cell<usize>,
    gradients: Cell<usize>,
    seen: RefCell<Vec<(Vec<usize>, NoiseDraw)>>,
}

impl LossOracle for Recording {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn begin_step(&mut self, step: u64) {
        self.inner.begin_step(step)
    }
    fn value(&self, theta: &Vector) -> PalResult<f64> {
        self.values.set(self.values.get() + 1);
        self.seen
            .borrow_mut()
            .push((self.inner.current_batch().to_vec(), self.inner.current_noise().clone()));
        self.inner.value(theta)
    }
    fn gradient(&self, theta: &Vector) -> PalResult<Vector> {
        self.gradients.set(self.gradients.get() + 1);
        self.inner.gradient(theta)
    }
}

fn c8_budget_and_noise() -> Check {
    let mlp = MlpProblem::new(MlpConfig { seed: 8, ..MlpConfig::default() }, two_blobs(500, 0))
        .map_err(|e| e.to_string())?;
    let theta0 = mlp.init_params(8);
    let mut oracle = Recording {
        inner: mlp,
        values: Cell::new(0),
        gradients: Cell::new(0),
        seen: RefCell::new(Vec::new()),
    };
    let mut pal = Pal::new(HyperParams::default(), theta0).unwrap();
    let steps = 50;
    for t in 0..steps {
        oracle.begin_step(t);
        oracle.values.set(0);
        oracle.gradients.set(0);
        oracle.seen.borrow_mut().clear();
        pal.step(&oracle).map_err(|e| e.to_string())?;
        let (v, g) = (oracle.values.get(), oracle.gradients.get());
        ensure(v == 2 && g == 1, || format!("step {t}: {v} value and {g} gradient evaluations"))?;
        let seen = oracle.seen.borrow();
        ensure(seen[0] == seen[1], || format!("step {t}: value evaluations saw different noise"))?;
        ensure(!seen[0].1.masks.is_empty(), || "noise mask is empty".into())?;
    }
    Ok(format!("{steps} steps: 2 values + 1 gradient each, identical batch and mask"))
}

fn c9_training_smoke() -> Check {
    let mut summary = Vec::new();
    for (name, baseline) in [("pal", None), ("sgd", Some(BaselineConfig::sgd(0.1, 0.9)))] {
        for seed in [1u64, 2, 3] {
            let cfg = MlpConfig {
                seed,
                ..MlpConfig::default()
            };
            let mut mlp = MlpProblem::new(cfg, two_blobs(500, 0)).map_err(|e| e.to_string())?;
            let theta0 = mlp.init_params(seed);
            let mut pal = Pal::new(HyperParams::default(), theta0.clone()).unwrap();
            let mut sgd = baseline.map(|b| Baseline::new(b, theta0).unwrap());
            let mut reached = None;
            for t in 0..2000u64 {
                mlp.begin_step(t);
                let theta = match &mut sgd {
                    Some(opt) => {
                        opt.step(&mlp).map_err(|e| e.to_string())?;
                        &opt.theta
                    }
                    None => {
                        pal.step(&mlp).map_err(|e| e.to_string())?;
                        pal.theta()
                    }
                };
                if (t + 1) % 25 == 0 {
                    let loss = mlp.dataset_loss(theta).map_err(|e| e.to_string())?;
                    if loss < 0.1 {
                        reached = Some((t + 1, loss));
                        break;
                    }
                }
            }
            let (step, loss) = reached.ok_or_else(|| format!("{name} seed {seed}: loss never dropped below 0.1"))?;
            summary.push(format!("{name}/{seed}: {loss:.3} @ {step}"));
        }
    }
    Ok(summary.join(", "))
}

const GRID_CONFIG: &str = "\
problem.kind = quadratic
problem.quadratic.dim = 2
problem.quadratic.condition_number = 10
optimizer.kind = pal
run.max_steps = 50
run.seeds = 1, 2, 3
grid.optimizer.pal.mu = 1, 0.1, 0.01
grid.optimizer.pal.beta = 0, 0.2, 0.4
grid.optimizer.pal.alpha = 1, 1/0.8, 1/0.6
grid.optimizer.pal.s_max = 1, 10
";

fn c10_grid_reproducibility() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("grid.cfg");
    fs::write(&config, GRID_CONFIG).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_pal"))
            .arg("grid")
            .arg(&config)
            .arg("--output")
            .arg(&out)
            .arg("--quiet")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("pal grid exited with {status}"))?;
        outputs.push(fs::read(out.join("grid.csv")).map_err(|e| e.to_string())?);
    }
    let text = String::from_utf8(outputs[0].clone()).map_err(|e| e.to_string())?;
    let rows = text.lines().count() - 1;
    ensure(rows == 54, || format!("{rows} rows"))?;
    ensure(outputs[0] == outputs[1], || "grid.csv differs between invocations".into())?;
    Ok(format!("54 rows, {} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1", "one-step exactness (κ=1)", c1_one_step_exactness, Duration::from_secs(1)),
        ("2", "convergence on SPD quadratics", c2_convergence_on_spd_quadratics, Duration::from_secs(10)),
        ("3", "mean-of-argmins identity", c3_family_identity, Duration::from_secs(1)),
        ("4", "parabolicity of quadratic lines", c4_parabolicity, Duration::from_secs(1)),
        ("5", "angle at estimated minimum", c5_angles, Duration::from_secs(30)),
        ("6", "MLP gradient check", c6_gradient_check, Duration::from_secs(5)),
        ("7", "case discrimination", c7_case_discrimination, Duration::from_secs(1)),
        ("8", "evaluation budget and noise coherence", c8_budget_and_noise, Duration::from_secs(1)),
        ("9", "MLP training smoke test", c9_training_smoke, Duration::from_secs(60)),
        ("10", "grid reproducibility", c10_grid_reproducibility, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {id:>2} {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
