use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use super::{Ordering, SparseSym};
use crate::error::{check_len, Error, Result};

static FACTORIZATIONS: AtomicUsize = AtomicUsize::new(0);

/// Number of numeric factorizations performed by this process so far.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.load(AtomicOrdering::Relaxed)
}

const NONE: usize = usize::MAX;

/// Sparse `P K P^T = L D L^T` factorization (up-looking, elimination-tree based).
///
/// Immutable once built; `solve` can be called from many threads.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    // unit lower factor, column-compressed, diagonal omitted
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Factorize with the default reverse Cuthill-McKee ordering.
pub fn factorize(k: &SparseSym) -> Result<Factorization> {
    factorize_with(k, &Ordering::default())
}

pub fn factorize_with(k: &SparseSym, ordering: &Ordering) -> Result<Factorization> {
    let n = k.n();
    let perm = ordering.permutation(k);
    check_len("ordering length", n, perm.len())?;
    let mut iperm = vec![NONE; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || iperm[old] != NONE {
            return Err(Error::InvalidInput("ordering is not a permutation".into()));
        }
        iperm[old] = new;
    }

    // symbolic: elimination tree and column counts of L
    let mut parent = vec![NONE; n];
    let mut flag = vec![NONE; n];
    let mut col_count = vec![0usize; n];
    for kk in 0..n {
        flag[kk] = kk;
        for (c, _) in k.row(perm[kk]) {
            let mut i = iperm[c];
            if i >= kk {
                continue;
            }
            while flag[i] != kk {
                if parent[i] == NONE {
                    parent[i] = kk;
                }
                col_count[i] += 1;
                flag[i] = kk;
                i = parent[i];
            }
        }
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    for &c in &col_count {
        col_ptr.push(col_ptr.last().unwrap() + c);
    }
    let lnz = *col_ptr.last().unwrap();
    let mut row_idx = vec![0usize; lnz];
    let mut vals = vec![0.0; lnz];
    let mut diag = vec![0.0; n];

    let max_diag = k.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let threshold = 1e-14 * max_diag;

    // numeric
    let mut y = vec![0.0; n];
    let mut pattern = vec![0usize; n];
    let mut filled = vec![0usize; n];
    for kk in 0..n {
        let mut top = n;
        flag[kk] = kk;
        for (c, v) in k.row(perm[kk]) {
            let mut i = iperm[c];
            if i > kk {
                continue;
            }
            y[i] += v;
            let mut len = 0;
            while flag[i] != kk {
                pattern[len] = i;
                len += 1;
                flag[i] = kk;
                i = parent[i];
            }
            while len > 0 {
                top -= 1;
                len -= 1;
                pattern[top] = pattern[len];
            }
        }
        let mut d = y[kk];
        y[kk] = 0.0;
        for &i in &pattern[top..n] {
            let yi = y[i];
            y[i] = 0.0;
            let start = col_ptr[i];
            for p in start..start + filled[i] {
                y[row_idx[p]] -= vals[p] * yi;
            }
            let l_ki = yi / diag[i];
            d -= l_ki * yi;
            let p = start + filled[i];
            row_idx[p] = kk;
            vals[p] = l_ki;
            filled[i] += 1;
        }
        if !(d > threshold) {
            return Err(Error::SingularMatrix {
                row: perm[kk],
                pivot: d,
                threshold,
            });
        }
        diag[kk] = d;
    }
    FACTORIZATIONS.fetch_add(1, AtomicOrdering::Relaxed);
    Ok(Factorization {
        n,
        perm,
        iperm,
        col_ptr,
        row_idx,
        vals,
        diag,
    })
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries of `L`.
    pub fn factor_nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Pivots of `D` in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    /// Solve `K x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("rhs", self.n, rhs.len())?;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                    x[self.row_idx[p]] -= self.vals[p] * xj;
                }
            }
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s -= self.vals[p] * x[self.row_idx[p]];
            }
            x[j] = s;
        }
        Ok((0..self.n).map(|i| x[self.iperm[i]]).collect())
    }
}

/// Free-function alias of [`Factorization::solve`].
pub fn solve_with(f: &Factorization, rhs: &[f64]) -> Result<Vec<f64>> {
    f.solve(rhs)
}
