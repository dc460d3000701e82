//! Dual update rules and the projection onto `lambda >= 0`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, EigenOptions, Factorization, SparseRect, SparseSym};

/// Which dual update the fixed-point loop applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateKind {
    /// `lambda + rho (B U - D)`
    Uzawa { rho: f64 },
    /// `k_N (B U - D)`; the previous multiplier is ignored.
    PenaltySplit { k_n: f64 },
}

impl UpdateKind {
    pub fn parameter(&self) -> f64 {
        match *self {
            UpdateKind::Uzawa { rho } => rho,
            UpdateKind::PenaltySplit { k_n } => k_n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpdateKind::Uzawa { .. } => "uzawa",
            UpdateKind::PenaltySplit { .. } => "penalty",
        }
    }

    pub fn check(&self) -> Result<()> {
        let v = self.parameter();
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{} parameter must be positive and finite, got {v}",
                self.name()
            )))
        }
    }

    /// Unprojected `lambda_hat` from the previous multiplier and the cached gap `B U - D`.
    pub fn apply(&self, lambda: &[f64], gap: &[f64]) -> Vec<f64> {
        match *self {
            UpdateKind::Uzawa { rho } => lambda.iter().zip(gap).map(|(l, g)| l + rho * g).collect(),
            UpdateKind::PenaltySplit { k_n } => gap.iter().map(|g| k_n * g).collect(),
        }
    }
}

/// `max(0, x)` component-wise.
pub fn project_nonneg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn project_nonneg_in_place(x: &mut [f64]) {
    for v in x {
        *v = v.max(0.0);
    }
}

fn gap(u: &[f64], b: &SparseRect, d: &[f64]) -> Result<Vec<f64>> {
    check_len("D", b.nrows(), d.len())?;
    let mut g = b.mul_vec(u)?;
    for (gj, dj) in g.iter_mut().zip(d) {
        *gj -= dj;
    }
    Ok(g)
}

pub fn uzawa_update(lambda: &[f64], u: &[f64], rho: f64, b: &SparseRect, d: &[f64]) -> Result<Vec<f64>> {
    check_len("lambda", b.nrows(), lambda.len())?;
    Ok(UpdateKind::Uzawa { rho }.apply(lambda, &gap(u, b, d)?))
}

pub fn penalty_update(u: &[f64], k_n: f64, b: &SparseRect, d: &[f64]) -> Result<Vec<f64>> {
    Ok(UpdateKind::PenaltySplit { k_n }.apply(&[], &gap(u, b, d)?))
}

/// Sufficient bound `2 mu_min(K) / ||B||_2` on the Uzawa parameter.
///
/// With `unit_b_norm` the norm of `B` is taken as 1.
pub fn uzawa_upper_bound(
    k: &SparseSym,
    f: &Factorization,
    b: &SparseRect,
    unit_b_norm: bool,
    opts: &EigenOptions,
) -> Result<f64> {
    let mu = linalg::min_eigenvalue_estimate(k, f, opts)?;
    let bn = if unit_b_norm {
        1.0
    } else {
        linalg::spectral_norm_estimate(b, opts)?
    };
    Ok(2.0 * mu / bn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::factorize;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_nonneg(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.5, 3.0]), vec![0.5, 3.0]);
    }

    #[test]
    fn uzawa_arithmetic() {
        let b = SparseRect::identity(1);
        assert_eq!(uzawa_update(&[0.0], &[0.5], 2.0, &b, &[1.0]).unwrap(), vec![-1.0]);
        assert_eq!(uzawa_update(&[3.0], &[1.0], 7.0, &b, &[1.0]).unwrap(), vec![3.0]);
        let b = SparseRect::identity(2);
        let l = uzawa_update(&[1.0, 2.0], &[0.1, -0.1], 10.0, &b, &[0.0, 0.0]).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_arithmetic() {
        let b = SparseRect::identity(2);
        let l = penalty_update(&[1e-6, -1e-6], 1e6, &b, &[0.0, 0.0]).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-12 && (l[1] + 1.0).abs() < 1e-12);
        assert_eq!(project_nonneg(&l)[1], 0.0);
        assert_eq!(penalty_update(&[0.3, 0.2], 1e6, &b, &[0.3, 0.2]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let b = SparseRect::identity(2);
        assert!(uzawa_update(&[0.0], &[1.0, 1.0], 1.0, &b, &[0.0, 0.0]).is_err());
        assert!(penalty_update(&[1.0], 1.0, &b, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn bound_examples() {
        let o = EigenOptions::default();
        let b = SparseRect::from_dense(&[vec![1.0, -1.0]]).unwrap();
        let k = SparseSym::from_diagonal(&[2.0, 2.0]);
        let f = factorize(&k).unwrap();
        assert!((uzawa_upper_bound(&k, &f, &b, true, &o).unwrap() - 4.0).abs() < 1e-5);
        let k = SparseSym::from_triplets(2, [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)])
            .unwrap();
        let f = factorize(&k).unwrap();
        assert!((uzawa_upper_bound(&k, &f, &b, true, &o).unwrap() - 2.0).abs() < 1e-5);
        let est = uzawa_upper_bound(&k, &f, &b, false, &o).unwrap();
        assert!((est - 2.0 / 2f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn invalid_parameter() {
        assert!(UpdateKind::Uzawa { rho: 0.0 }.check().is_err());
        assert!(UpdateKind::PenaltySplit { k_n: f64::NAN }.check().is_err());
        assert!(UpdateKind::PenaltySplit { k_n: 1e9 }.check().is_ok());
    }

    fn vecs(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n))
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(x in prop::collection::vec(-1e3f64..1e3, 0..20)) {
            let p = project_nonneg(&x);
            prop_assert_eq!(project_nonneg(&p), p);
        }

        #[test]
        fn projection_is_non_expansive((x, y) in vecs(8)) {
            let d = linalg::norm2(&linalg::sub(&project_nonneg(&x), &project_nonneg(&y)));
            prop_assert!(d <= linalg::norm2(&linalg::sub(&x, &y)) + 1e-15);
        }

        #[test]
        fn penalty_is_regularized_uzawa((lambda, g) in vecs(6), k_n in 1.0f64..1e8) {
            let p = UpdateKind::PenaltySplit { k_n }.apply(&lambda, &g);
            // one Uzawa step on the system with a -I/k_N block, rho = k_N
            let reg: Vec<f64> = lambda.iter().zip(&g).map(|(l, gj)| l + k_n * (gj - l / k_n)).collect();
            for (a, b) in p.iter().zip(&reg) {
                prop_assert!((a - b).abs() <= 1e-15 * (1.0 + k_n * 10.0));
            }
        }

        #[test]
        fn kkt_point_is_fixed((lambda, g) in vecs(6), rho in 1e-3f64..1e6) {
            // build a complementary pair: lambda >= 0 where gap = 0, gap <= 0 where lambda = 0
            let lam: Vec<f64> = lambda.iter().map(|l| l.max(0.0)).collect();
            let gap: Vec<f64> = lam.iter().zip(&g).map(|(l, gj)| if *l > 0.0 { 0.0 } else { -gj.abs() }).collect();
            let next = project_nonneg(&UpdateKind::Uzawa { rho }.apply(&lam, &gap));
            prop_assert_eq!(next, lam);
        }
    }
}
