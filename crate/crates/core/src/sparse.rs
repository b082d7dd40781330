//! Coordinate-list sparse matrices.
//!
//! Entries are kept in canonical form: sorted row-major, no duplicate
//! coordinates, no stored zeros, all values finite. Two matrices with the same
//! mathematical content therefore compare equal entry for entry, which the
//! round-trip and determinism checks rely on.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

/// Parallel-array form used by the instance file format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Triplets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_triplets(n, n, values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from triplets, rejecting duplicates, out-of-range
    /// indices and non-finite values. Explicit zeros are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix entries"));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|a| (a.0, a.1));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidInput(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        entries.retain(|e| e.2 != 0.0);
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    /// Like [`from_triplets`](Self::from_triplets) but sums duplicate
    /// coordinates in input order.
    pub fn from_triplets_summed<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        // stable sort keeps the summation order deterministic
        entries.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Self::from_triplets(n_rows, n_cols, merged)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn from_parts(n_rows: usize, n_cols: usize, t: &Triplets) -> Result<Self> {
        if t.rows.len() != t.vals.len() || t.cols.len() != t.vals.len() {
            return Err(Error::Dimension(
                "triplet arrays have different lengths".into(),
            ));
        }
        Self::from_triplets(
            n_rows,
            n_cols,
            t.rows
                .iter()
                .zip(&t.cols)
                .zip(&t.vals)
                .map(|((&r, &c), &v)| (r, c, v)),
        )
    }

    pub fn to_parts(&self) -> Triplets {
        Triplets {
            rows: self.entries.iter().map(|e| e.0).collect(),
            cols: self.entries.iter().map(|e| e.1).collect(),
            vals: self.entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(row, col)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// `y = Mᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_rows);
        let mut y = vec![0.0; self.n_cols];
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|a| (a.0, a.1));
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            entries,
        }
    }

    /// Exact structural and numerical symmetry. Returns the first entry
    /// without a mirror.
    pub fn check_symmetric(&self) -> Result<()> {
        if self.n_rows != self.n_cols {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        for &(r, c, v) in &self.entries {
            if r != c && self.get(c, r) != v {
                return Err(Error::Asymmetric { row: r, col: c });
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.check_symmetric().is_ok()
    }

    pub fn diag(&self) -> Vec<f64> {
        let n = self.n_rows.min(self.n_cols);
        let mut d = vec![0.0; n];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc.max(e.2.abs()))
    }

    /// Euclidean norm of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_rows];
        for &(r, _, v) in &self.entries {
            s[r] += v * v;
        }
        s.into_iter().map(f64::sqrt).collect()
    }

    /// `diag(row_scale) · M · diag(col_scale)`.
    pub fn scaled(&self, row_scale: Option<&[f64]>, col_scale: Option<&[f64]>) -> SparseMatrix {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| {
                let mut w = v;
                if let Some(d) = row_scale {
                    w *= d[r];
                }
                if let Some(a) = col_scale {
                    w *= a[c];
                }
                (r, c, w)
            })
            .filter(|e| e.2 != 0.0)
            .collect();
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries,
        }
    }

    /// `diag(s) · M · diag(s)`, computing `v·(sᵢsⱼ)` so a symmetric input
    /// stays bitwise symmetric.
    pub fn scaled_symmetric(&self, s: &[f64]) -> SparseMatrix {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * (s[r] * s[c])))
            .filter(|e| e.2 != 0.0)
            .collect();
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries,
        }
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> SparseMatrix {
        let mut new_index = vec![usize::MAX; self.n_rows];
        for (k, &r) in keep.iter().enumerate() {
            new_index[r] = k;
        }
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter(|e| new_index[e.0] != usize::MAX)
            .map(|&(r, c, v)| (new_index[r], c, v))
            .collect();
        entries.sort_by_key(|a| (a.0, a.1));
        SparseMatrix {
            n_rows: keep.len(),
            n_cols: self.n_cols,
            entries,
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_cols(&self, keep: &[usize]) -> SparseMatrix {
        let mut new_index = vec![usize::MAX; self.n_cols];
        for (k, &c) in keep.iter().enumerate() {
            new_index[c] = k;
        }
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter(|e| new_index[e.1] != usize::MAX)
            .map(|&(r, c, v)| (r, new_index[c], v))
            .collect();
        entries.sort_by_key(|a| (a.0, a.1));
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: keep.len(),
            entries,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_cols {
            return Err(Error::Dimension(format!(
                "vstack of {} and {} columns",
                self.n_cols, other.n_cols
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend(
            other
                .entries
                .iter()
                .map(|&(r, c, v)| (r + self.n_rows, c, v)),
        );
        Ok(SparseMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            entries,
        })
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows {
            return Err(Error::Dimension(format!(
                "hstack of {} and {} rows",
                self.n_rows, other.n_rows
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend(
            other
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c + self.n_cols, v)),
        );
        entries.sort_by_key(|a| (a.0, a.1));
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols + other.n_cols,
            entries,
        })
    }

    /// Block-diagonal `[[self, 0], [0, other]]`.
    pub fn block_diag(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut entries = self.entries.clone();
        entries.extend(
            other
                .entries
                .iter()
                .map(|&(r, c, v)| (r + self.n_rows, c + self.n_cols, v)),
        );
        SparseMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols + other.n_cols,
            entries,
        }
    }

    /// Relabels rows and columns: entry `(r, c)` moves to
    /// `(row_perm[r], col_perm[c])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> SparseMatrix {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (row_perm[r], col_perm[c], v))
            .collect();
        entries.sort_by_key(|a| (a.0, a.1));
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_nan() {
        assert!(SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, [(0, 0, f64::NAN)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn canonical_order_and_zero_drop() {
        let m = SparseMatrix::from_triplets(2, 3, [(1, 2, 3.0), (0, 1, 0.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.entries(), &[(0, 0, 1.0), (1, 2, 3.0)]);
        assert_eq!(m.get(1, 2), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn products_match_dense() {
        let m = SparseMatrix::from_triplets(2, 3, [(0, 0, 1.0), (0, 2, -2.0), (1, 1, 4.0)]).unwrap();
        let d = m.to_dense();
        let x = [1.0, 2.0, 3.0];
        let y = m.mul_vec(&x);
        let yd = &d * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y, yd.as_slice());
        let z = m.tr_mul_vec(&[1.0, -1.0]);
        assert_eq!(z, vec![1.0, -4.0, -2.0]);
    }

    #[test]
    fn symmetry_check() {
        let s = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(s.is_symmetric());
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(a.check_symmetric(), Err(Error::Asymmetric { row: 0, col: 1 })));
    }

    #[test]
    fn stacking_and_selection() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_triplets(1, 2, [(0, 1, 5.0)]).unwrap();
        let v = a.vstack(&b).unwrap();
        assert_eq!(v.n_rows(), 3);
        assert_eq!(v.select_rows(&[0, 1]), a);
        let h = a.hstack(&SparseMatrix::zeros(2, 1)).unwrap();
        assert_eq!(h.select_cols(&[0, 1]), a);
        let bd = a.block_diag(&SparseMatrix::identity(1));
        assert_eq!(bd, SparseMatrix::identity(3));
    }
}
