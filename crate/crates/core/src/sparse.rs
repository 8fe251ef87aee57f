//! Compressed-sparse-row complex matrices.

use crate::linalg::{CMatrix, CVector, C64, ZERO};

/// Square CSR matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of_entries = Vec::with_capacity(triplets.len());
        for (r, col, v) in triplets {
            debug_assert!(r < dim && col < dim);
            if last == Some((r, col)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(col);
                values.push(v);
                rows_of_entries.push(r);
                last = Some((r, col));
            }
        }
        // drop cancelled entries
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, col), v) in rows_of_entries.iter().zip(col_idx).zip(values) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(col);
                keep_vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.row(r)
            .find(|&(j, _)| j == col)
            .map(|(_, v)| v)
            .unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(j, v)| (r, j, v)))
            .collect()
    }

    pub fn matvec(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.dim);
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &CVector, y: &mut CVector) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (j, v) in self.row(r) {
                m[(r, j)] += v;
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sparse add");
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.dim, t)
    }

    /// Weighted sum of same-dimension matrices.
    pub fn linear_combination(dim: usize, parts: &[(f64, &CsrMatrix)]) -> Self {
        let mut t = Vec::new();
        for (w, m) in parts {
            assert_eq!(m.dim, dim);
            t.extend(m.triplets().into_iter().map(|(r, c, v)| (r, c, v * *w)));
        }
        Self::from_triplets(dim, t)
    }

    /// Principal submatrix on the listed basis indices (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = std::collections::HashMap::with_capacity(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            position.insert(i, k);
        }
        let mut t = Vec::new();
        for (k, &i) in indices.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Some(&kj) = position.get(&j) {
                    t.push((k, kj, v));
                }
            }
        }
        Self::from_triplets(indices.len(), t)
    }

    /// max |A − A†| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (j, v) in self.row(r) {
                worst = worst.max((v - self.get(j, r).conj()).norm());
            }
        }
        worst
    }

    /// Max absolute row sum, an upper bound on the spectral norm.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Shift by a multiple of the identity.
    pub fn shifted(&self, sigma: f64) -> Self {
        let mut t = self.triplets();
        t.extend((0..self.dim).map(|i| (i, i, C64::new(sigma, 0.0))));
        Self::from_triplets(self.dim, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn duplicates_are_summed_and_cancellations_dropped() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (2, 2, c(1.0)), (2, 2, c(-1.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
        assert_eq!(m.get(2, 2), ZERO);
    }

    #[test]
    fn restrict_takes_principal_block() {
        let dense = CMatrix::from_fn(4, 4, |i, j| c((4 * i + j) as f64));
        let m = CsrMatrix::from_dense(&dense);
        let r = m.restrict(&[3, 1]).to_dense();
        assert_eq!(r[(0, 0)], c(15.0));
        assert_eq!(r[(0, 1)], c(13.0));
        assert_eq!(r[(1, 0)], c(7.0));
    }
}
