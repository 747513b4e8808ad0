use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::spd::make_random_spd;
use crate::error::{check_dim, Error, Result};
use crate::{LossOracle, Vector};

const SYMMETRY_TOL: f64 = 1e-12;

fn factor_spd(q: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !q.is_square() {
        return Err(Error::invalid(format!(
            "curvature matrix must be square, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let scale = q.amax().max(1.0);
    let n = q.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!("curvature matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Cholesky::new(q.clone()).ok_or(Error::NotPositiveDefinite)
}

/// `f(x) = c + r·x + xᵀQx` with symmetric positive definite `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    q: DMatrix<f64>,
    r: Vector,
    c: f64,
    chol: Cholesky<f64, Dyn>,
}

impl QuadraticProblem {
    pub fn new(q: DMatrix<f64>, r: Vector, c: f64) -> Result<Self> {
        let chol = factor_spd(&q)?;
        check_dim(q.nrows(), r.len())?;
        Ok(QuadraticProblem { q, r, c, chol })
    }

    /// `||x - center||²`, i.e. `Q = I`, `r = -2 center`, `c = ||center||²`.
    pub fn shifted_isotropic(center: &Vector) -> Self {
        let n = center.len();
        Self::new(DMatrix::identity(n, n), center * -2.0, center.norm_squared())
            .expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear(&self) -> &Vector {
        &self.r
    }

    pub fn offset(&self) -> f64 {
        self.c
    }

    pub fn value_grad(&self, x: &Vector) -> Result<(f64, Vector)> {
        check_dim(self.dim(), x.len())?;
        let qx = &self.q * x;
        let value = self.c + self.r.dot(x) + x.dot(&qx);
        Ok((value, qx * 2.0 + &self.r))
    }

    /// `-½ Q⁻¹ r`, by Cholesky solve.
    pub fn argmin(&self) -> Vector {
        self.chol.solve(&(&self.r * -0.5))
    }
}

impl LossOracle for QuadraticProblem {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn begin_step(&mut self, _step: u64) {}

    fn value(&self, theta: &Vector) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        Ok(self.c + self.r.dot(theta) + theta.dot(&(&self.q * theta)))
    }

    fn gradient(&self, theta: &Vector) -> Result<Vector> {
        check_dim(self.dim(), theta.len())?;
        Ok(&self.q * theta * 2.0 + &self.r)
    }
}

/// Batch-wise quadratics `c_i + r_i·x + xᵀQx` sharing one curvature matrix.
///
/// `begin_step(t)` selects batch `t mod batches`.
#[derive(Debug, Clone)]
pub struct StochasticQuadraticFamily {
    q: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    linears: Vec<Vector>,
    offsets: Vec<f64>,
    cursor: usize,
}

impl StochasticQuadraticFamily {
    pub fn new(q: DMatrix<f64>, linears: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let chol = factor_spd(&q)?;
        if linears.is_empty() {
            return Err(Error::invalid("a quadratic family needs at least one batch"));
        }
        if linears.len() != offsets.len() {
            return Err(Error::invalid(format!(
                "{} linear terms but {} offsets",
                linears.len(),
                offsets.len()
            )));
        }
        for r in &linears {
            check_dim(q.nrows(), r.len())?;
        }
        Ok(StochasticQuadraticFamily {
            q,
            chol,
            linears,
            offsets,
            cursor: 0,
        })
    }

    /// Random family: shared SPD curvature with the given condition number,
    /// standard normal linear terms scaled by `spread`, zero offsets.
    pub fn random(dim: usize, batches: usize, condition_number: f64, spread: f64, seed: u64) -> Result<Self> {
        let q = make_random_spd(dim, condition_number, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let linears = (0..batches)
            .map(|_| Vector::from_fn(dim, |_, _| spread * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self::new(q, linears, vec![0.0; batches])
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn batches(&self) -> usize {
        self.linears.len()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn batch(&self, i: usize) -> QuadraticProblem {
        QuadraticProblem {
            q: self.q.clone(),
            r: self.linears[i].clone(),
            c: self.offsets[i],
            chol: self.chol.clone(),
        }
    }

    /// The averaged objective `(1/n) Σ L_i`.
    pub fn mean_problem(&self) -> QuadraticProblem {
        let n = self.batches() as f64;
        let r = self.linears.iter().fold(Vector::zeros(self.dim()), |acc, r| acc + r) / n;
        let c = self.offsets.iter().sum::<f64>() / n;
        QuadraticProblem {
            q: self.q.clone(),
            r,
            c,
            chol: self.chol.clone(),
        }
    }
}

impl LossOracle for StochasticQuadraticFamily {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn begin_step(&mut self, step: u64) {
        self.cursor = (step % self.linears.len() as u64) as usize;
    }

    fn value(&self, theta: &Vector) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        let r = &self.linears[self.cursor];
        Ok(self.offsets[self.cursor] + r.dot(theta) + theta.dot(&(&self.q * theta)))
    }

    fn gradient(&self, theta: &Vector) -> Result<Vector> {
        check_dim(self.dim(), theta.len())?;
        Ok(&self.q * theta * 2.0 + &self.linears[self.cursor])
    }
}

/// Minimizer of the mean objective computed two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyArgmin {
    /// Solve with the averaged linear term.
    pub analytic: Vector,
    /// Mean of the per-batch minimizers.
    pub averaged: Vector,
}

pub fn family_mean_argmin(fam: &StochasticQuadraticFamily) -> FamilyArgmin {
    let analytic = fam.mean_problem().argmin();
    let n = fam.batches() as f64;
    let averaged = fam
        .linears
        .iter()
        .map(|r| fam.chol.solve(&(r * -0.5)))
        .fold(Vector::zeros(fam.dim()), |acc, x| acc + x)
        / n;
    FamilyArgmin { analytic, averaged }
}
