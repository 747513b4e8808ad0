use crate::{Result, Vector};

/// A differentiable objective that may contain randomness.
///
/// `begin_step` selects the batch and draws one noise realization. Until the
/// next `begin_step`, `value` and `gradient` must be pure functions of
/// `theta`, so that a line search sees a continuous loss along its line.
pub trait LossOracle {
    fn dimension(&self) -> usize;

    fn begin_step(&mut self, step: u64);

    fn value(&self, theta: &Vector) -> Result<f64>;

    fn gradient(&self, theta: &Vector) -> Result<Vector>;
}

impl<T: LossOracle + ?Sized> LossOracle for Box<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn begin_step(&mut self, step: u64) {
        (**self).begin_step(step)
    }

    fn value(&self, theta: &Vector) -> Result<f64> {
        (**self).value(theta)
    }

    fn gradient(&self, theta: &Vector) -> Result<Vector> {
        (**self).gradient(theta)
    }
}
