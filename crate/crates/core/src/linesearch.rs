//! The PAL update rule.
//!
//! One step measures the loss at the current point and at distance `mu` along
//! the unit search direction, takes the directional derivative from the
//! gradient, fits `l(s) = a s^2 + b s + c` and moves to the vertex of that
//! parabola (scaled by `alpha`, clamped to `s_max`). The search direction is
//! the negative gradient blended with the previous direction by a constant
//! factor `beta`.

use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::{LossOracle, Vector};

/// Relative scale below which a direction or gradient counts as zero.
pub const DEGENERACY_SCALE: f64 = 1e-12;

/// Threshold below which a direction or gradient norm is treated as zero at
/// a point with norm `theta_norm`.
pub fn degeneracy_threshold(theta_norm: f64) -> f64 {
    DEGENERACY_SCALE * theta_norm.max(1.0)
}

/// The four knobs of PAL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Measuring step size: distance along the unit direction of the second
    /// loss sample.
    pub mu: f64,
    /// Update step adaptation; multiplies the vertex step. Must be >= 1.
    pub alpha: f64,
    /// Conjugate gradient factor in `[0, 1]`.
    pub beta: f64,
    /// Maximum step size. `None` means unbounded.
    pub s_max: Option<f64>,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            mu: 0.1,
            alpha: 1.0 / 0.8,
            beta: 0.2,
            s_max: Some(10.0),
        }
    }
}

impl HyperParams {
    pub fn new(mu: f64, alpha: f64, beta: f64, s_max: Option<f64>) -> Result<Self> {
        let hp = HyperParams {
            mu,
            alpha,
            beta,
            s_max,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// Plain PAL without the additional features: no step adaptation, no
    /// conjugate direction, no step limit.
    pub fn basic(mu: f64) -> Self {
        HyperParams {
            mu,
            alpha: 1.0,
            beta: 0.0,
            s_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.mu.is_finite() && self.mu > 0.0) {
            problems.push(format!("mu must be positive and finite, got {}", self.mu));
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            problems.push(format!("alpha must be >= 1, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            problems.push(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if let Some(s_max) = self.s_max {
            if !(s_max > 0.0) {
                problems.push(format!("s_max must be positive, got {}", s_max));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Parameters plus the memory PAL carries between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub t: u64,
    pub prev_direction: Vector,
    pub theta: Vector,
}

impl OptimizerState {
    pub fn new(theta: Vector) -> Self {
        OptimizerState {
            t: 0,
            prev_direction: Vector::zeros(theta.len()),
            theta,
        }
    }
}

/// Which branch of the case discrimination a step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepCase {
    /// Positive curvature and negative slope: jump to the vertex.
    MinimumFound,
    /// Non-positive curvature and negative slope: step by `mu`.
    ConcaveOrLinear,
    /// Non-negative slope: no update.
    Extremum,
}

impl StepCase {
    pub fn label(self) -> &'static str {
        match self {
            StepCase::MinimumFound => "minimum",
            StepCase::ConcaveOrLinear => "concave_or_linear",
            StepCase::Extremum => "extremum",
        }
    }
}

impl fmt::Display for StepCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `l(s) ≈ a s^2 + b s + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ParabolaCoefficients {
    pub fn eval(&self, s: f64) -> f64 {
        (self.a * s + self.b) * s + self.c
    }

    /// Location of the vertex when the parabola opens upwards.
    pub fn vertex(&self) -> Option<f64> {
        (self.a > 0.0).then(|| -self.b / (2.0 * self.a))
    }
}

/// Full trace of a single PAL step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Loss at the current point (`c` of the fitted parabola).
    pub l0: f64,
    /// Loss at the measuring point.
    pub l_mu: f64,
    /// Directional derivative along the unit direction.
    pub b: f64,
    /// Fitted curvature coefficient.
    pub a: f64,
    pub case: StepCase,
    pub s_raw: f64,
    pub s_upd: f64,
    pub clamped: bool,
    /// The conjugate direction was not a descent direction and was replaced
    /// by the negative gradient.
    pub direction_reset: bool,
    /// Norm of the gradient at the current point.
    pub grad_norm: f64,
}

impl StepReport {
    pub fn parabola(&self) -> ParabolaCoefficients {
        ParabolaCoefficients {
            a: self.a,
            b: self.b,
            c: self.l0,
        }
    }
}

/// Fits `a s^2 + b s + c` through `l(0) = l0`, `l'(0) = dderiv` and
/// `l(mu) = l_mu`.
pub fn fit_parabola(l0: f64, dderiv: f64, l_mu: f64, mu: f64) -> Result<ParabolaCoefficients> {
    if !(l0.is_finite() && dderiv.is_finite() && l_mu.is_finite() && mu.is_finite()) {
        return Err(Error::invalid("parabola fit needs finite inputs"));
    }
    if mu <= 0.0 {
        return Err(Error::invalid(format!("measuring distance must be positive, got {mu}")));
    }
    Ok(ParabolaCoefficients {
        a: (l_mu - l0 - dderiv * mu) / (mu * mu),
        b: dderiv,
        c: l0,
    })
}

/// Case discrimination on the fitted parabola. Returns the unclamped step.
pub fn select_case(a: f64, b: f64, mu: f64, alpha: f64) -> (StepCase, f64) {
    if b < 0.0 {
        if a > 0.0 {
            (StepCase::MinimumFound, -alpha * b / (2.0 * a))
        } else {
            (StepCase::ConcaveOrLinear, mu)
        }
    } else {
        (StepCase::Extremum, 0.0)
    }
}

/// `-grad + beta * prev_dir`.
pub fn conjugate_direction(grad: &Vector, prev_dir: &Vector, beta: f64) -> Result<Vector> {
    check_dim(grad.len(), prev_dir.len())?;
    Ok(prev_dir * beta - grad)
}

/// Slope of the loss along the unit vector `dir / ||dir||`.
pub fn directional_derivative(grad: &Vector, dir: &Vector) -> Result<f64> {
    check_dim(grad.len(), dir.len())?;
    let norm = dir.norm();
    if norm < degeneracy_threshold(0.0) {
        return Err(Error::DegenerateDirection { norm });
    }
    Ok(grad.dot(dir) / norm)
}

fn finite_or_diverged(loss: f64, theta: &Vector) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Diverged {
            loss,
            theta: theta.clone(),
        })
    }
}

/// Performs one PAL update on `state`.
///
/// The oracle must already be positioned on the step's batch and noise draw.
/// Uses two value evaluations and one gradient evaluation, except at a
/// stationary point where the second value is not measured.
pub fn pal_step<O>(oracle: &O, state: &mut OptimizerState, hp: &HyperParams) -> Result<StepReport>
where
    O: LossOracle + ?Sized,
{
    check_dim(oracle.dimension(), state.theta.len())?;
    check_dim(state.theta.len(), state.prev_direction.len())?;

    let theta = &state.theta;
    let l0 = finite_or_diverged(oracle.value(theta)?, theta)?;
    let grad = oracle.gradient(theta)?;
    check_dim(theta.len(), grad.len())?;

    let threshold = degeneracy_threshold(theta.norm());
    let grad_norm = grad.norm();
    let mut direction = conjugate_direction(&grad, &state.prev_direction, hp.beta)?;
    let mut direction_reset = false;

    if direction.norm() < threshold {
        if grad_norm < threshold {
            state.prev_direction = direction;
            state.t += 1;
            return Ok(StepReport {
                l0,
                l_mu: l0,
                b: 0.0,
                a: 0.0,
                case: StepCase::Extremum,
                s_raw: 0.0,
                s_upd: 0.0,
                clamped: false,
                direction_reset,
                grad_norm,
            });
        }
        direction = -&grad;
        direction_reset = true;
    }

    let mut unit = direction.normalize();
    let mut b = grad.dot(&unit);
    if b >= 0.0 && grad_norm >= threshold && !direction_reset {
        direction = -&grad;
        unit = direction.normalize();
        b = grad.dot(&unit);
        direction_reset = true;
    }

    let probe = theta + &unit * hp.mu;
    let l_mu = finite_or_diverged(oracle.value(&probe)?, &probe)?;

    let parabola = fit_parabola(l0, b, l_mu, hp.mu)?;
    let (case, s_raw) = select_case(parabola.a, parabola.b, hp.mu, hp.alpha);
    let (s_upd, clamped) = match hp.s_max {
        Some(s_max) if s_raw > s_max => (s_max, true),
        _ => (s_raw, false),
    };

    if s_upd > 0.0 {
        state.theta.axpy(s_upd, &unit, 1.0);
    }
    state.prev_direction = direction;
    state.t += 1;

    Ok(StepReport {
        l0,
        l_mu,
        b: parabola.b,
        a: parabola.a,
        case,
        s_raw,
        s_upd,
        clamped,
        direction_reset,
        grad_norm,
    })
}

/// PAL optimizer: hyperparameters plus state.
#[derive(Debug, Clone)]
pub struct Pal {
    pub hp: HyperParams,
    pub state: OptimizerState,
}

impl Pal {
    pub fn new(hp: HyperParams, theta0: Vector) -> Result<Self> {
        hp.validate()?;
        Ok(Pal {
            hp,
            state: OptimizerState::new(theta0),
        })
    }

    pub fn theta(&self) -> &Vector {
        &self.state.theta
    }

    /// Unit direction of the most recent step, if it was nondegenerate.
    pub fn last_unit_direction(&self) -> Option<Vector> {
        let d = &self.state.prev_direction;
        (d.norm() > 0.0).then(|| d.normalize())
    }

    pub fn step<O: LossOracle + ?Sized>(&mut self, oracle: &O) -> Result<StepReport> {
        pal_step(oracle, &mut self.state, &self.hp)
    }
}
