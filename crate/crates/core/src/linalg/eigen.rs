use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm2, Factorization, SparseRect, SparseSym};
use crate::error::{check_len, Error, Result};

/// Settings for the single-vector power iterations.
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative stopping tolerance on successive estimates.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            seed: 42,
        }
    }
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    x
}

/// Smallest eigenvalue of SPD `K` by inverse iteration on its factorization.
///
/// The returned value is the Rayleigh quotient of the last iterate, so it
/// approaches `mu_min` from above.
pub fn min_eigenvalue_estimate(k: &SparseSym, f: &Factorization, opts: &EigenOptions) -> Result<f64> {
    check_len("factorization size", k.n(), f.n())?;
    let n = k.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let mut x = random_unit(n, opts.seed);
    let mut prev = f64::INFINITY;
    for it in 0..opts.max_iter {
        let y = f.solve(&x)?;
        // with K y = x the Rayleigh quotient of y is (y.x)/(y.y)
        let yy = dot(&y, &y);
        let rq = dot(&y, &x) / yy;
        let ny = yy.sqrt();
        x = y.into_iter().map(|v| v / ny).collect();
        if it > 0 && (rq - prev).abs() <= 0.1 * opts.tol * rq.abs() {
            return Ok(rq);
        }
        prev = rq;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

/// Largest singular value of `B` by power iteration on `B^T B`.
pub fn spectral_norm_estimate(b: &SparseRect, opts: &EigenOptions) -> Result<f64> {
    let n = b.ncols();
    if n == 0 || b.nnz() == 0 {
        return Ok(0.0);
    }
    let mut x = random_unit(n, opts.seed);
    let mut prev = 0.0;
    for it in 0..opts.max_iter {
        let y = b.mul_vec_transpose(&b.mul_vec(&x)?)?;
        let sigma2 = dot(&x, &y);
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y.into_iter().map(|v| v / ny).collect();
        let sigma = sigma2.max(0.0).sqrt();
        if it > 0 && (sigma - prev).abs() <= 0.1 * opts.tol * sigma {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::factorize;

    #[test]
    fn diagonal_spectrum() {
        let k = SparseSym::from_diagonal(&[2.0, 5.0, 9.0]);
        let f = factorize(&k).unwrap();
        let mu = min_eigenvalue_estimate(&k, &f, &EigenOptions::default()).unwrap();
        assert!((mu - 2.0).abs() <= 2e-6);
    }

    #[test]
    fn two_by_two() {
        let k = SparseSym::from_triplets(2, [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)])
            .unwrap();
        let f = factorize(&k).unwrap();
        let mu = min_eigenvalue_estimate(&k, &f, &EigenOptions::default()).unwrap();
        assert!((mu - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn singular_values() {
        let o = EigenOptions::default();
        assert!((spectral_norm_estimate(&SparseRect::identity(4), &o).unwrap() - 1.0).abs() < 1e-12);
        let b = SparseRect::from_dense(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert!((spectral_norm_estimate(&b, &o).unwrap() - 4.0).abs() <= 4e-6);
        let b = SparseRect::from_dense(&[vec![1.0, -1.0]]).unwrap();
        assert!((spectral_norm_estimate(&b, &o).unwrap() - 2f64.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let k = SparseSym::from_diagonal(&[1.0, 1.0 + 1e-9, 3.0]);
        let f = factorize(&k).unwrap();
        let o = EigenOptions {
            tol: 1e-300,
            max_iter: 5,
            seed: 1,
        };
        assert!(matches!(
            min_eigenvalue_estimate(&k, &f, &o),
            Err(Error::NoConvergence { iterations: 5 })
        ));
    }
}
