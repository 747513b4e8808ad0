//! WebAssembly bindings for the browser demo.
//!
//! Every export returns a flat `Float64Array`; the layout is documented on
//! each function. The `*_impl` functions hold the logic so it can be tested
//! natively.

use nalgebra::DMatrix;
use pal_core::diagnostics::{angle_at_estimated_minimum, default_profile_grid, sample_line_profile};
use pal_core::problems::{two_blobs, MlpConfig, MlpProblem, QuadraticProblem};
use pal_core::{HyperParams, LossOracle, Pal, Vector};
use wasm_bindgen::prelude::*;

const SAMPLES: usize = 500;

/// `f(x) = xᵀQx` with eigenvalues 1 and `condition_number`, eigenbasis
/// rotated by `rotation_deg`.
fn rotated_quadratic(condition_number: f64, rotation_deg: f64) -> Result<QuadraticProblem, String> {
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(format!("condition number must be finite and >= 1, got {condition_number}"));
    }
    let (s, c) = rotation_deg.to_radians().sin_cos();
    let u = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let d = DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, condition_number]));
    let q = &u * d * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    QuadraticProblem::new(q, Vector::zeros(2), 0.0).map_err(|e| e.to_string())
}

fn hyper_params(mu: f64, alpha: f64, beta: f64, s_max: f64) -> Result<HyperParams, String> {
    let s_max = (s_max > 0.0 && s_max.is_finite()).then_some(s_max);
    HyperParams::new(mu, alpha, beta, s_max).map_err(|e| e.to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn quadratic_trajectory_impl(
    condition_number: f64,
    rotation_deg: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    s_max: f64,
    steps: u32,
    start_x: f64,
    start_y: f64,
) -> Result<Vec<f64>, String> {
    let problem = rotated_quadratic(condition_number, rotation_deg)?;
    let start = Vector::from_vec(vec![start_x, start_y]);
    let mut pal = Pal::new(hyper_params(mu, alpha, beta, s_max)?, start).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * (steps as usize + 1));
    let push = |out: &mut Vec<f64>, theta: &Vector| {
        out.extend([theta[0], theta[1], problem.value(theta).unwrap_or(f64::NAN)]);
    };
    push(&mut out, pal.theta());
    for _ in 0..steps {
        let report = pal.step(&problem).map_err(|e| e.to_string())?;
        push(&mut out, pal.theta());
        if report.s_upd == 0.0 {
            break;
        }
    }
    Ok(out)
}

pub fn quadratic_surface_impl(condition_number: f64, rotation_deg: f64, half_width: f64, n: u32) -> Result<Vec<f64>, String> {
    let problem = rotated_quadratic(condition_number, rotation_deg)?;
    if n < 2 {
        return Err("surface needs at least 2 points per side".into());
    }
    let coord = |i: u32| -half_width + 2.0 * half_width * f64::from(i) / f64::from(n - 1);
    let mut out = Vec::with_capacity((n * n) as usize);
    for row in 0..n {
        for col in 0..n {
            let x = Vector::from_vec(vec![coord(col), coord(n - 1 - row)]);
            out.push(problem.value(&x).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn mlp(seed: u64) -> Result<MlpProblem, String> {
    let cfg = MlpConfig {
        seed,
        ..MlpConfig::default()
    };
    MlpProblem::new(cfg, two_blobs(SAMPLES, 0)).map_err(|e| e.to_string())
}

pub fn mlp_line_profile_impl(seed: u64, step: u32, points: u32) -> Result<Vec<f64>, String> {
    let mut problem = mlp(seed)?;
    let mut pal = Pal::new(HyperParams::default(), problem.init_params(seed)).map_err(|e| e.to_string())?;
    for t in 0..u64::from(step) {
        problem.begin_step(t);
        pal.step(&problem).map_err(|e| e.to_string())?;
    }
    problem.begin_step(u64::from(step));
    let theta = pal.theta().clone();
    let report = pal.step(&problem).map_err(|e| e.to_string())?;
    if report.s_upd == 0.0 {
        return Err(format!("step {step} made no update ({})", report.case.label()));
    }
    let grid = default_profile_grid(report.s_upd, points as usize);
    let profile = sample_line_profile(&problem, &theta, &pal.state.prev_direction, &grid).map_err(|e| e.to_string())?;
    let f = profile.fitted;
    let mut out = vec![f.a, f.b, f.c, report.s_upd];
    for (s, l) in profile.s_values.iter().zip(&profile.losses) {
        out.extend([*s, *l]);
    }
    Ok(out)
}

pub fn mlp_angle_series_impl(seed: u64, steps: u32, alpha: f64) -> Result<Vec<f64>, String> {
    let mut problem = mlp(seed)?;
    let hp = HyperParams {
        alpha,
        ..HyperParams::default()
    };
    let mut pal = Pal::new(hp, problem.init_params(seed)).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(steps as usize);
    for t in 0..u64::from(steps) {
        problem.begin_step(t);
        let report = pal.step(&problem).map_err(|e| e.to_string())?;
        let angle = if report.s_upd > 0.0 {
            angle_at_estimated_minimum(&problem, pal.theta(), &pal.state.prev_direction, t + 1)
                .map_or(f64::NAN, |r| r.angle_degrees)
        } else {
            f64::NAN
        };
        out.push(angle);
    }
    Ok(out)
}

fn js(result: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    result.map_err(|e| JsError::new(&e))
}

/// PAL on a 2-D quadratic. Layout: `[x, y, f]` per iterate, starting point
/// first. Stops early when a step makes no update. `s_max <= 0` means
/// unbounded.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn quadratic_trajectory(
    condition_number: f64,
    rotation_deg: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    s_max: f64,
    steps: u32,
    start_x: f64,
    start_y: f64,
) -> Result<Vec<f64>, JsError> {
    js(quadratic_trajectory_impl(
        condition_number,
        rotation_deg,
        mu,
        alpha,
        beta,
        s_max,
        steps,
        start_x,
        start_y,
    ))
}

/// Quadratic values on an `n x n` grid over `[-half_width, half_width]²`,
/// row-major with the top row (largest y) first.
#[wasm_bindgen]
pub fn quadratic_surface(condition_number: f64, rotation_deg: f64, half_width: f64, n: u32) -> Result<Vec<f64>, JsError> {
    js(quadratic_surface_impl(condition_number, rotation_deg, half_width, n))
}

/// Loss along PAL's line at `step` of training the two-blob MLP with default
/// hyperparameters. Layout: `[a, b, c, s_upd]` then `[s, loss]` pairs.
#[wasm_bindgen]
pub fn mlp_line_profile(seed: u32, step: u32, points: u32) -> Result<Vec<f64>, JsError> {
    js(mlp_line_profile_impl(u64::from(seed), step, points))
}

/// Angle in degrees between each step's direction and the gradient at the
/// new point, same batch and noise. NaN where undefined.
#[wasm_bindgen]
pub fn mlp_angle_series(seed: u32, steps: u32, alpha: f64) -> Result<Vec<f64>, JsError> {
    js(mlp_angle_series_impl(u64::from(seed), steps, alpha))
}
