//! Reference first-order optimizers: SGD with momentum, Adam and RMSProp.
//!
//! Update rules, with `g` the gradient and `lr` the learning rate:
//!
//! * SGD with momentum: `v ← m·v + g`, `θ ← θ − lr·v`.
//! * Adam (bias corrected): `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`,
//!   `θ ← θ − lr·m̂ / (√v̂ + ε)` with `m̂ = m/(1−β1ᵗ)`, `v̂ = v/(1−β2ᵗ)`.
//! * RMSProp (uncentered, ε inside the root): `s ← ρ·s + (1−ρ)·g²`,
//!   `θ ← θ − lr·g / √(s + ε)`.
//!
//! All moment buffers start at zero. There is no weight decay.

use crate::error::{check_dim, Error, Result};
use crate::{LossOracle, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineConfig {
    SgdMomentum {
        learning_rate: f64,
        momentum: f64,
    },
    Adam {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    RmsProp {
        learning_rate: f64,
        discounting: f64,
        epsilon: f64,
    },
}

impl BaselineConfig {
    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        BaselineConfig::SgdMomentum {
            learning_rate,
            momentum,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        BaselineConfig::Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        BaselineConfig::RmsProp {
            learning_rate,
            discounting: 0.9,
            epsilon: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineConfig::SgdMomentum { .. } => "sgd",
            BaselineConfig::Adam { .. } => "adam",
            BaselineConfig::RmsProp { .. } => "rmsprop",
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            BaselineConfig::SgdMomentum { learning_rate, .. }
            | BaselineConfig::Adam { learning_rate, .. }
            | BaselineConfig::RmsProp { learning_rate, .. } => learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let lr = self.learning_rate();
        if !(lr.is_finite() && lr > 0.0) {
            problems.push(format!("learning_rate must be positive, got {lr}"));
        }
        let mut decay = |name: &str, v: f64| {
            if !(0.0..1.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 1), got {v}"));
            }
        };
        match *self {
            BaselineConfig::SgdMomentum { momentum, .. } => decay("momentum", momentum),
            BaselineConfig::Adam { beta1, beta2, .. } => {
                decay("beta1", beta1);
                decay("beta2", beta2);
            }
            BaselineConfig::RmsProp { discounting, .. } => decay("discounting", discounting),
        }
        match *self {
            BaselineConfig::Adam { epsilon, .. } | BaselineConfig::RmsProp { epsilon, .. }
                if !(epsilon > 0.0) =>
            {
                problems.push(format!("epsilon must be positive, got {epsilon}"));
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Moment buffers. Only the ones the configured kind uses are touched.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    pub t: u64,
    pub first_moment: Vector,
    pub second_moment: Vector,
    pub velocity: Vector,
}

impl BaselineState {
    pub fn new(dim: usize) -> Self {
        BaselineState {
            t: 0,
            first_moment: Vector::zeros(dim),
            second_moment: Vector::zeros(dim),
            velocity: Vector::zeros(dim),
        }
    }
}

/// One update of the configured kind. Returns the new parameters and the loss
/// at the old ones.
pub fn baseline_step<O>(
    oracle: &O,
    theta: &Vector,
    state: &mut BaselineState,
    cfg: &BaselineConfig,
) -> Result<(Vector, f64)>
where
    O: LossOracle + ?Sized,
{
    check_dim(oracle.dimension(), theta.len())?;
    check_dim(theta.len(), state.velocity.len())?;
    let loss = oracle.value(theta)?;
    if !loss.is_finite() {
        return Err(Error::Diverged {
            loss,
            theta: theta.clone(),
        });
    }
    let g = oracle.gradient(theta)?;
    check_dim(theta.len(), g.len())?;
    state.t += 1;

    let new_theta = match *cfg {
        BaselineConfig::SgdMomentum {
            learning_rate,
            momentum,
        } => {
            state.velocity = &state.velocity * momentum + &g;
            theta - &state.velocity * learning_rate
        }
        BaselineConfig::Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } => {
            let t = state.t as i32;
            state.first_moment = &state.first_moment * beta1 + &g * (1.0 - beta1);
            state.second_moment = &state.second_moment * beta2 + g.map(|x| x * x) * (1.0 - beta2);
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let step = state
                .first_moment
                .zip_map(&state.second_moment, |m, v| (m / c1) / ((v / c2).sqrt() + epsilon));
            theta - step * learning_rate
        }
        BaselineConfig::RmsProp {
            learning_rate,
            discounting,
            epsilon,
        } => {
            state.second_moment = &state.second_moment * discounting + g.map(|x| x * x) * (1.0 - discounting);
            let step = g.zip_map(&state.second_moment, |gi, s| gi / (s + epsilon).sqrt());
            theta - step * learning_rate
        }
    };
    Ok((new_theta, loss))
}

/// Baseline optimizer: configuration, state and current parameters.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub cfg: BaselineConfig,
    pub state: BaselineState,
    pub theta: Vector,
}

impl Baseline {
    pub fn new(cfg: BaselineConfig, theta0: Vector) -> Result<Self> {
        cfg.validate()?;
        Ok(Baseline {
            cfg,
            state: BaselineState::new(theta0.len()),
            theta: theta0,
        })
    }

    /// Applies one update and returns the loss before it.
    pub fn step<O: LossOracle + ?Sized>(&mut self, oracle: &O) -> Result<f64> {
        let (theta, loss) = baseline_step(oracle, &self.theta, &mut self.state, &self.cfg)?;
        self.theta = theta;
        Ok(loss)
    }
}
