//! Reference solutions of the contact problem.
//!
//! Both solvers eliminate `U` through the dual (Schur) operator
//! `S = B K^-1 B^T` and `g0 = B K^-1 F_ext - D`, so that `B U - D = g0 - S lambda`.
//! The columns `K^-1 B^T e_j` come from one factorization of `K`.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::problem::ContactProblem;

/// `K^-1 F_ext`, the columns `K^-1 B^T e_j`, `S` and `g0`.
#[derive(Debug, Clone)]
pub struct DualOperator {
    pub u0: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    pub s: DMatrix<f64>,
    pub g0: Vec<f64>,
}

impl DualOperator {
    pub fn new(p: &ContactProblem) -> Result<Self> {
        let f = p.factorize()?;
        let n = p.n();
        let m = p.n_lambda();
        let u0 = f.solve(&p.f_ext)?;
        let mut columns = Vec::with_capacity(m);
        let mut e = vec![0.0; n];
        for j in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            for (c, v) in p.b.row(j) {
                e[c] = v;
            }
            columns.push(f.solve(&e)?);
        }
        let mut s = DMatrix::zeros(m, m);
        for (j, col) in columns.iter().enumerate() {
            let bc = p.b.mul_vec(col)?;
            for i in 0..m {
                s[(i, j)] = bc[i];
            }
        }
        // symmetrize round-off
        let s = (&s + s.transpose()) * 0.5;
        let g0 = p.gap(&u0)?;
        Ok(Self { u0, columns, s, g0 })
    }

    pub fn n_lambda(&self) -> usize {
        self.g0.len()
    }

    /// `U = K^-1 (F_ext - B^T lambda)`
    pub fn displacement(&self, lambda: &[f64]) -> Vec<f64> {
        let mut u = self.u0.clone();
        for (l, col) in lambda.iter().zip(&self.columns) {
            if *l != 0.0 {
                for (ui, ci) in u.iter_mut().zip(col) {
                    *ui -= l * ci;
                }
            }
        }
        u
    }

    /// Multipliers with `(B U - D)_A = 0` and zero off `A`; `None` if `S_AA` is singular.
    pub fn solve_active(&self, active: &[usize]) -> Option<Vec<f64>> {
        let k = active.len();
        let mut lambda = vec![0.0; self.n_lambda()];
        if k == 0 {
            return Some(lambda);
        }
        let saa = DMatrix::from_fn(k, k, |a, b| self.s[(active[a], active[b])]);
        let rhs = DVector::from_iterator(k, active.iter().map(|&j| self.g0[j]));
        let x = match saa.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => saa.lu().solve(&rhs)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (a, &j) in active.iter().enumerate() {
            lambda[j] = x[a];
        }
        Some(lambda)
    }

    /// `g0 - S lambda`
    pub fn gap(&self, lambda: &[f64]) -> Vec<f64> {
        let l = DVector::from_column_slice(lambda);
        let sl = &self.s * l;
        self.g0.iter().zip(sl.iter()).map(|(g, v)| g - v).collect()
    }

    fn tolerances(&self, lambda: &[f64]) -> (f64, f64) {
        let gap_scale = norm_inf(&self.g0).max(f64::MIN_POSITIVE);
        let lam_scale = norm_inf(lambda).max(gap_scale / self.s.amax().max(f64::MIN_POSITIVE));
        (1e-10 * lam_scale, 1e-10 * gap_scale)
    }

    /// Largest eigenvalue of `S`; standard Uzawa converges for `rho < 2 / lambda_max(S)`.
    pub fn max_eigenvalue(&self) -> f64 {
        if self.n_lambda() == 0 {
            return 0.0;
        }
        self.s.clone().symmetric_eigenvalues().max()
    }
}

/// Sharp parameter threshold `2 / lambda_max(B K^-1 B^T)` of unprojected Uzawa.
pub fn uzawa_sharp_threshold(p: &ContactProblem) -> Result<f64> {
    let d = DualOperator::new(p)?;
    Ok(2.0 / d.max_eigenvalue())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Sorted indices with `lambda_j > 0`.
    pub active: Vec<usize>,
    /// Another candidate set also satisfied the conditions.
    pub ambiguous: bool,
    pub outer_iterations: usize,
}

fn finish(dual: &DualOperator, mut lambda: Vec<f64>, ambiguous: bool, outer: usize) -> KktSolution {
    let (lam_tol, _) = dual.tolerances(&lambda);
    for l in &mut lambda {
        if *l <= lam_tol {
            *l = l.max(0.0);
        }
    }
    let active = (0..lambda.len()).filter(|&j| lambda[j] > lam_tol).collect();
    let u = dual.displacement(&lambda);
    KktSolution {
        u,
        lambda,
        active,
        ambiguous,
        outer_iterations: outer,
    }
}

/// Active-set solution of the contact problem.
///
/// Each outer step solves the equality-constrained problem on the current set,
/// then drops every negative multiplier and adds every penetrating pair at once.
/// A repeated set switches to single-index exchanges (least index first), which
/// terminate because `S` is positive definite; a repeat there is reported.
pub fn solve_saddle_point_active_set(p: &ContactProblem, max_outer: usize) -> Result<KktSolution> {
    let dual = DualOperator::new(p)?;
    let m = dual.n_lambda();
    let (_, gap_tol0) = dual.tolerances(&[]);
    let mut active: Vec<usize> = (0..m).filter(|&j| dual.g0[j] > gap_tol0).collect();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut single = false;
    for outer in 1..=max_outer {
        if !visited.insert(active.clone()) {
            if single {
                return Err(Error::CycleDetected { outer });
            }
            single = true;
            visited.clear();
            visited.insert(active.clone());
        }
        let lambda = dual.solve_active(&active).ok_or(Error::NoKktPoint)?;
        let gap = dual.gap(&lambda);
        let (lam_tol, gap_tol) = dual.tolerances(&lambda);
        let in_set: Vec<bool> = {
            let mut v = vec![false; m];
            active.iter().for_each(|&j| v[j] = true);
            v
        };
        let violated = |j: usize| {
            if in_set[j] {
                lambda[j] < -lam_tol
            } else {
                gap[j] > gap_tol
            }
        };
        if !(0..m).any(violated) {
            return Ok(finish(&dual, lambda, false, outer));
        }
        let mut next: Vec<usize>;
        if single {
            let j = (0..m).find(|&j| violated(j)).expect("violation exists");
            next = active.clone();
            if in_set[j] {
                next.retain(|&a| a != j);
            } else {
                next.push(j);
                next.sort_unstable();
            }
        } else {
            next = (0..m)
                .filter(|&j| if in_set[j] { lambda[j] >= -lam_tol } else { gap[j] > gap_tol })
                .collect();
        }
        active = next;
    }
    Err(Error::MaxOuter(max_outer))
}

/// Enumerate every active set (smallest first) and return the one meeting all conditions.
pub fn brute_force_kkt(p: &ContactProblem) -> Result<KktSolution> {
    let m = p.n_lambda();
    if m > 20 {
        return Err(Error::InvalidInput(format!("enumeration needs at most 20 pairs, got {m}")));
    }
    let dual = DualOperator::new(p)?;
    let mut masks: Vec<u32> = (0..(1u32 << m)).collect();
    masks.sort_by_key(|mask| (mask.count_ones(), *mask));
    let mut found: Option<Vec<f64>> = None;
    let mut ambiguous = false;
    let mut checked = 0;
    for mask in masks {
        let active: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        checked += 1;
        let Some(lambda) = dual.solve_active(&active) else {
            continue;
        };
        let gap = dual.gap(&lambda);
        let (lam_tol, gap_tol) = dual.tolerances(&lambda);
        let ok = (0..m).all(|j| {
            if mask & (1 << j) != 0 {
                lambda[j] >= -lam_tol
            } else {
                gap[j] <= gap_tol
            }
        });
        if ok {
            if found.is_some() {
                ambiguous = true;
                break;
            }
            found = Some(lambda);
        }
    }
    let lambda = found.ok_or(Error::NoKktPoint)?;
    Ok(finish(&dual, lambda, ambiguous, checked))
}
