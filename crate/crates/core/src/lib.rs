//! Parabolic approximation line search (PAL) for noisy, differentiable
//! objectives, together with first-order baselines, analytically tractable
//! quadratic test problems, a small MLP with reproducible per-step noise,
//! line-profile diagnostics and a deterministic experiment harness.
//!
//! The optimizer only ever needs two loss values and one gradient per step:
//! it fits a parabola to the loss along the (conjugate) search direction and
//! jumps to its vertex. See [`linesearch::pal_step`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linesearch;
pub mod oracle;
pub mod problems;

pub use error::{Error, Result};
pub use linesearch::{pal_step, HyperParams, OptimizerState, Pal, StepCase, StepReport};
pub use oracle::LossOracle;

/// Dense parameter vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
