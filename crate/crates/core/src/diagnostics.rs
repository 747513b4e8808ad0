//! Line profiles and the angle between travel direction and gradient.
//!
//! A line profile samples the loss along a fixed unit direction under one
//! noise draw and overlays the parabola fitted from `l(0)`, `l'(0)` and one
//! more sample. The angle metric checks whether a step landed on a
//! one-dimensional minimum: at such a point the gradient is orthogonal to
//! the direction of travel, so the angle is 90°. Larger angles mean the step
//! overshot, smaller ones that it stopped short.

use crate::error::{check_dim, Error, Result};
use crate::linesearch::{degeneracy_threshold, fit_parabola, ParabolaCoefficients};
use crate::{LossOracle, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    /// Positions along the unit direction, strictly increasing.
    pub s_values: Vec<f64>,
    pub losses: Vec<f64>,
    pub fitted: ParabolaCoefficients,
    /// Vertex of the fitted parabola when it opens upwards.
    pub s_min_estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRecord {
    pub step: u64,
    pub angle_degrees: f64,
    pub grad_norm_at_estimate: f64,
}

fn unit_direction(dir: &Vector) -> Result<Vector> {
    let norm = dir.norm();
    if !(norm >= degeneracy_threshold(0.0)) {
        return Err(Error::DegenerateDirection { norm });
    }
    Ok(dir / norm)
}

/// Samples `value(theta + s·dir/||dir||)` for every `s` in `s_grid`.
///
/// The parabola is fitted from `l(0)`, the directional derivative at `theta`
/// and the loss at the smallest positive grid value.
pub fn sample_line_profile<O>(oracle: &O, theta: &Vector, dir: &Vector, s_grid: &[f64]) -> Result<LineProfile>
where
    O: LossOracle + ?Sized,
{
    check_dim(theta.len(), dir.len())?;
    if s_grid.is_empty() {
        return Err(Error::invalid("profile grid is empty"));
    }
    if s_grid.iter().any(|s| !s.is_finite()) || s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("profile grid must be finite and strictly increasing"));
    }
    let (mu_index, &mu) = s_grid
        .iter()
        .enumerate()
        .find(|(_, s)| **s > 0.0)
        .ok_or_else(|| Error::invalid("profile grid needs a positive position to fit the parabola"))?;
    let unit = unit_direction(dir)?;

    let losses = s_grid
        .iter()
        .map(|&s| {
            let point = theta + &unit * s;
            let loss = oracle.value(&point)?;
            if loss.is_finite() {
                Ok(loss)
            } else {
                Err(Error::Diverged { loss, theta: point })
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let l0 = oracle.value(theta)?;
    let slope = oracle.gradient(theta)?.dot(&unit);
    let fitted = fit_parabola(l0, slope, losses[mu_index], mu)?;
    Ok(LineProfile {
        s_values: s_grid.to_vec(),
        losses,
        fitted,
        s_min_estimate: fitted.vertex(),
    })
}

/// `points` evenly spaced positions over `[-0.5·s_upd, 2.5·s_upd]`.
pub fn default_profile_grid(s_upd: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (-0.5 * s_upd, 2.5 * s_upd);
    match points {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Angle in degrees between `dir` and the gradient at `theta_new`.
///
/// Fails with [`Error::StationaryPoint`] when the gradient vanishes there.
pub fn angle_at_estimated_minimum<O>(oracle: &O, theta_new: &Vector, dir: &Vector, step: u64) -> Result<AngleRecord>
where
    O: LossOracle + ?Sized,
{
    check_dim(theta_new.len(), dir.len())?;
    let unit = unit_direction(dir)?;
    let grad = oracle.gradient(theta_new)?;
    angle_from_gradient(&grad, &unit, degeneracy_threshold(theta_new.norm()), step)
}

pub(crate) fn angle_from_gradient(grad: &Vector, unit: &Vector, threshold: f64, step: u64) -> Result<AngleRecord> {
    let norm = grad.norm();
    if !(norm >= threshold) {
        return Err(Error::StationaryPoint { norm });
    }
    let cos = (grad.dot(unit) / norm).clamp(-1.0, 1.0);
    Ok(AngleRecord {
        step,
        angle_degrees: cos.acos().to_degrees(),
        grad_norm_at_estimate: norm,
    })
}

/// Largest deviation of the samples from the fitted parabola, relative to
/// `max(1, |loss|)`.
pub fn parabola_fit_residual(profile: &LineProfile) -> f64 {
    profile
        .s_values
        .iter()
        .zip(&profile.losses)
        .map(|(&s, &loss)| (loss - profile.fitted.eval(s)).abs() / loss.abs().max(1.0))
        .fold(0.0, f64::max)
}
