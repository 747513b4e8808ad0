use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Random symmetric positive definite `n x n` matrix `U D Uᵀ`.
///
/// `U` is Haar-distributed orthogonal (sign-corrected QR of a Gaussian
/// matrix). The eigenvalues are log-uniform in `[1, condition_number]`, with
/// the two extremes pinned so the spectrum spans that interval exactly. For
/// `n == 1` the result is `[1]`.
pub fn make_random_spd(n: usize, condition_number: f64, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("matrix dimension must be at least 1"));
    }
    if !(condition_number.is_finite() && condition_number >= 1.0) {
        return Err(Error::invalid(format!(
            "condition number must be finite and >= 1, got {condition_number}"
        )));
    }
    if n == 1 {
        return Ok(DMatrix::identity(1, 1));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gaussian.qr();
    let mut u = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            u.column_mut(j).neg_mut();
        }
    }

    let log_kappa = condition_number.ln();
    let mut eigenvalues: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            i if i == n - 1 => condition_number,
            _ => (rng.random::<f64>() * log_kappa).exp(),
        })
        .collect();
    eigenvalues.sort_by(f64::total_cmp);

    let mut scaled = u.clone();
    for (j, lambda) in eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*lambda);
    }
    let q = scaled * u.transpose();
    Ok((&q + q.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
        let eig = m.clone().symmetric_eigen();
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    #[test]
    fn scalar_case_is_one() {
        assert_eq!(make_random_spd(1, 1.0, 123).unwrap(), DMatrix::identity(1, 1));
        assert_eq!(make_random_spd(1, 50.0, 123).unwrap(), DMatrix::identity(1, 1));
    }

    #[test]
    fn unit_condition_gives_identity() {
        let m = make_random_spd(6, 1.0, 3).unwrap();
        assert!((m - DMatrix::identity(6, 6)).amax() < 1e-14);
    }

    #[test]
    fn spectrum_spans_condition_number() {
        let m = make_random_spd(4, 100.0, 7).unwrap();
        let (lo, hi) = extreme_eigenvalues(&m);
        assert!((lo - 1.0).abs() < 1e-8, "{lo}");
        assert!((hi - 100.0).abs() < 1e-8, "{hi}");
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(make_random_spd(5, 10.0, 9).unwrap(), make_random_spd(5, 10.0, 9).unwrap());
        assert_ne!(make_random_spd(5, 10.0, 9).unwrap(), make_random_spd(5, 10.0, 10).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_random_spd(0, 1.0, 0).is_err());
        assert!(make_random_spd(3, 0.5, 0).is_err());
        assert!(make_random_spd(3, f64::NAN, 0).is_err());
    }
}
