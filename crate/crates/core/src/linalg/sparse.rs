use crate::error::{check_len, Error, Result};

/// Merge `(col, value)` pairs of one row: sort by column, sum duplicates.
fn compress_row(entries: &mut Vec<(usize, f64)>, drop_zeros: bool) {
    entries.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for &(c, v) in entries.iter() {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    if drop_zeros {
        out.retain(|&(_, v)| v != 0.0);
    }
    *entries = out;
}

fn build_csr(
    nrows: usize,
    ncols: usize,
    triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    force_diagonal: bool,
    drop_zeros: bool,
) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
    for (i, j, v) in triplets {
        if i >= nrows || j >= ncols {
            return Err(Error::InvalidInput(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        rows[i].push((j, v));
    }
    let mut offsets = Vec::with_capacity(nrows + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for (i, row) in rows.iter_mut().enumerate() {
        if force_diagonal {
            row.push((i, 0.0));
        }
        compress_row(row, drop_zeros);
        for &(c, v) in row.iter() {
            cols.push(c);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    Ok((offsets, cols, vals))
}

/// Symmetric sparse matrix in CSR layout with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    ///
    /// The triplets must describe the full symmetric pattern (both
    /// triangles). Every diagonal entry is stored, possibly as zero.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let (row_offsets, col_indices, values) = build_csr(n, n, triplets, true, false)?;
        let m = Self {
            n,
            row_offsets,
            col_indices,
            values,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    /// Build from lower-triangle triplets, mirroring off-diagonal entries.
    pub fn from_lower_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut full = Vec::new();
        for (i, j, v) in triplets {
            if j > i {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is above the diagonal"
                )));
            }
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(n, full)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Block-diagonal concatenation.
    pub fn block_diagonal(blocks: &[&SparseSym]) -> Self {
        let n = blocks.iter().map(|b| b.n).sum();
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut shift = 0;
        for b in blocks {
            for i in 0..b.n {
                for (j, v) in b.row(i) {
                    col_indices.push(j + shift);
                    values.push(v);
                }
                row_offsets.push(col_indices.len());
            }
            shift += b.n;
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let t = self.get(j, i);
                match t {
                    Some(t) if (t - v).abs() <= 1e-14 * v.abs().max(t.abs()) => {}
                    Some(0.0) | None if v == 0.0 => {}
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "matrix is not symmetric at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        let cols = &self.col_indices[r.clone()];
        cols.binary_search(&j).ok().map(|k| self.values[r.start + k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    /// `K x`; symmetric, so the transpose flag of [`spmv`](Self::spmv) is moot.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("K * x", self.n, x.len())?;
        Ok((0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    pub fn spmv(&self, x: &[f64], _transpose: bool) -> Result<Vec<f64>> {
        self.mul_vec(x)
    }

    /// Lower-triangle triplets, row-major.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j <= i {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Rectangular sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRect {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRect {
    /// Build from triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let (row_offsets, col_indices, values) = build_csr(nrows, ncols, triplets, false, true)?;
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let trip = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)));
        Self::from_triplets(rows.len(), ncols, trip)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let trip = rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(move |(j, &v)| (i, j, v))
        });
        Self::from_triplets(rows.len(), ncols, trip)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Stack rows of several matrices with identical column count.
    pub fn vstack(parts: &[&SparseRect]) -> Result<Self> {
        let ncols = parts.first().map_or(0, |p| p.ncols);
        let mut rows = Vec::new();
        for p in parts {
            check_len("vstack columns", ncols, p.ncols)?;
            for i in 0..p.nrows {
                rows.push(p.row(i).collect::<Vec<_>>());
            }
        }
        Self::from_rows(ncols, &rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let picked: Vec<Vec<(usize, f64)>> = rows.iter().map(|&i| self.row(i).collect()).collect();
        Self::from_rows(self.ncols, &picked).expect("rows come from a valid matrix")
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("B * x", self.ncols, x.len())?;
        Ok((0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    pub fn mul_vec_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("B^T * y", self.nrows, y.len())?;
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        Ok(out)
    }

    pub fn spmv(&self, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if transpose {
            self.mul_vec_transpose(x)
        } else {
            self.mul_vec(x)
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_diagonal_forced() {
        let k = SparseSym::from_triplets(3, [(0, 0, 1.0), (0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0)])
            .unwrap();
        assert_eq!(k.get(0, 0), Some(2.0));
        assert_eq!(k.get(2, 2), Some(0.0));
        assert_eq!(k.get(0, 2), None);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let err = SparseSym::from_triplets(2, [(0, 1, 1.0), (1, 0, 2.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn pair_row_products() {
        let b = SparseRect::from_dense(&[vec![1.0, -1.0]]).unwrap();
        assert_eq!(b.spmv(&[2.0, 5.0], false).unwrap(), vec![-3.0]);
        assert_eq!(b.spmv(&[7.0], true).unwrap(), vec![7.0, -7.0]);
        let id = SparseRect::identity(2);
        assert_eq!(id.spmv(&[3.0, 4.0], false).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn rect_rows_are_sorted_without_zeros() {
        let b = SparseRect::from_triplets(1, 4, [(0, 3, 1.0), (0, 1, 2.0), (0, 2, 0.0)]).unwrap();
        let row: Vec<_> = b.row(0).collect();
        assert_eq!(row, vec![(1, 2.0), (3, 1.0)]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = SparseRect::identity(2);
        assert!(matches!(
            b.mul_vec(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let k = SparseSym::identity(2);
        assert!(k.mul_vec(&[1.0, 2.0, 3.0]).is_err());
    }
}
