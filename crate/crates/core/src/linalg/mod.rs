//! Sparse symmetric linear algebra used by the splitting solvers.
//!
//! Only what the fixed-point loop needs: CSR storage, a reusable sparse
//! `LDL^T` factorization, sparse products and extreme-eigenvalue estimates.

mod eigen;
mod ldl;
pub mod mtx;
mod ordering;
mod sparse;

pub use eigen::{min_eigenvalue_estimate, spectral_norm_estimate, EigenOptions};
pub use ldl::{factorization_count, factorize, factorize_with, solve_with, Factorization};
pub use ordering::{nested_dissection, reverse_cuthill_mckee, Ordering};
pub use sparse::{SparseRect, SparseSym};

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `a - b`, element-wise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Hybrid closeness test `|a - b| <= atol + rtol * |b|` with `atol = 1e-14`.
pub fn approx_eq(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= 1e-14 + rtol * b.abs()
}
