//! Sparse real matrix in CSR form.
//!
//! This is the workhorse behind adjacency channels, walk-count products,
//! degree matrices, and the row-normalized propagation matrices. Stored
//! entries are always nonzero and column indices are sorted within each
//! row.

use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<S> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity_scaled(n: usize, v: S) -> Self {
        if v == S::zero() {
            return Self::zeros(n, n);
        }
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![v; n],
        }
    }

    /// Build from coordinate triplets. Duplicate coordinates are summed;
    /// entries that cancel to zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, S)]) -> Self {
        let mut sorted: Vec<(usize, usize, S)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, S)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            assert!(r < rows && c < cols, "triplet out of bounds");
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (r, c, v) in merged {
            if v == S::zero() {
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as parallel (column, value) slices.
    pub fn row(&self, r: usize) -> (&[usize], &[S]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => S::zero(),
        }
    }

    /// Iterate stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<(usize, usize, S)> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &triplets)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut triplets: Vec<(usize, usize, S)> = self.iter().collect();
        triplets.extend(rhs.iter());
        Self::from_triplets(self.rows, self.cols, &triplets)
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = self.clone();
        if s == S::zero() {
            return Self::zeros(self.rows, self.cols);
        }
        for v in &mut out.values {
            *v = *v * s;
        }
        out
    }

    /// Multiply each row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[S]) -> Self {
        assert_eq!(factors.len(), self.rows);
        let triplets: Vec<(usize, usize, S)> = self
            .iter()
            .map(|(r, c, v)| (r, c, v * factors[r]))
            .collect();
        Self::from_triplets(self.rows, self.cols, &triplets)
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "sparse matmul dimension mismatch");
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        // dense accumulator per output row
        let mut acc: Vec<S> = vec![S::zero(); rhs.cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rcols, rvals) = rhs.row(k);
                for (&c, &b) in rcols.iter().zip(rvals) {
                    if acc[c] == S::zero() {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c];
                acc[c] = S::zero();
                if v != S::zero() {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            touched.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Self {
            rows: self.rows,
            cols: rhs.cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse-dense product.
    pub fn mul_dense(&self, rhs: &DenseMatrix<S>) -> DenseMatrix<S> {
        assert_eq!(self.cols, rhs.rows(), "mul_dense dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let src = rhs.row(k);
                let dst = out.row_mut(r);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().copied().sum())
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<S> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out.set(r, c, v);
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(S) -> S) -> Self {
        let triplets: Vec<(usize, usize, S)> =
            self.iter().map(|(r, c, v)| (r, c, f(v))).collect();
        Self::from_triplets(self.rows, self.cols, &triplets)
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.rows.min(self.cols)).all(|i| self.get(i, i) == S::zero())
    }

    /// `self^k` for square matrices, `k >= 1`.
    pub fn pow(&self, k: usize) -> Self {
        assert!(self.rows == self.cols && k >= 1);
        let mut out = self.clone();
        for _ in 1..k {
            out = out.matmul(self);
        }
        out
    }
}
