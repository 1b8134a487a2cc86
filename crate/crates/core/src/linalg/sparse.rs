//! Compressed sparse row storage.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseMatrix;
use crate::error::LinalgError;

/// CSR matrix with sorted column indices and no explicitly stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, v)| (i, i, *v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets).expect("diagonal in bounds")
    }

    /// Canonicalizing constructor: sorts column indices, sums duplicates and
    /// drops entries that end up exactly zero.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(LinalgError::IndexOutOfBounds { row: i, col: j, rows, cols });
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols_tmp = vec![0usize; triplets.len()];
        let mut vals_tmp = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let p = next[i];
            cols_tmp[p] = j;
            vals_tmp[p] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..rows {
            let (s, e) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(s..e);
            order.sort_by_key(|&p| cols_tmp[p]);
            let mut k = 0;
            while k < order.len() {
                let j = cols_tmp[order[k]];
                let mut v = 0.0;
                while k < order.len() && cols_tmp[order[k]] == j {
                    v += vals_tmp[order[k]];
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { rows, cols, row_ptr, col_idx, values })
    }

    /// Builds from raw CSR arrays, then canonicalizes.
    pub fn from_csr_parts(
        rows: usize,
        cols: usize,
        row_ptr: &[usize],
        col_idx: &[usize],
        values: &[f64],
    ) -> Result<Self, LinalgError> {
        if row_ptr.len() != rows + 1 {
            return Err(LinalgError::DimensionMismatch { expected: rows + 1, found: row_ptr.len() });
        }
        if col_idx.len() != values.len() {
            return Err(LinalgError::DimensionMismatch { expected: col_idx.len(), found: values.len() });
        }
        let mut triplets = Vec::with_capacity(values.len());
        for i in 0..rows {
            let (s, e) = (row_ptr[i], row_ptr[i + 1]);
            if s > e || e > col_idx.len() {
                return Err(LinalgError::DimensionMismatch { expected: col_idx.len(), found: e });
            }
            for p in s..e {
                triplets.push((i, col_idx[p], values[p]));
            }
        }
        Self::from_triplets(rows, cols, &triplets)
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, v) in m.row(i).iter().enumerate() {
                if *v != 0.0 {
                    col_idx.push(j);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { rows: m.rows(), cols: m.cols(), row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (j, x) in c.iter().zip(v) {
                d.set(i, *j, *x);
            }
        }
        d
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => 0.0,
        }
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (c, _) = self.row(i);
        c.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(j, a)| a * x[*j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y += selfᵀ x`
    pub fn tr_mul_vec_acc(&self, x: &[f64], y: &mut [f64]) {
        for (i, xi) in x.iter().enumerate().take(self.rows) {
            if *xi != 0.0 {
                let (c, v) = self.row(i);
                for (j, a) in c.iter().zip(v) {
                    y[*j] += a * xi;
                }
            }
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.tr_mul_vec_acc(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (j, x) in c.iter().zip(v) {
                let p = next[*j];
                col_idx[p] = i;
                values[p] = *x;
                next[*j] += 1;
            }
        }
        CsrMatrix { rows: self.cols, cols: self.rows, row_ptr: counts, col_idx, values }
    }

    pub fn select_rows(&self, idx: &[usize]) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in idx {
            let (c, v) = self.row(i);
            col_idx.extend_from_slice(c);
            values.extend_from_slice(v);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { rows: idx.len(), cols: self.cols, row_ptr, col_idx, values }
    }

    pub fn vstack(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.cols);
        let mut row_ptr = self.row_ptr.clone();
        let base = self.nnz();
        row_ptr.extend(other.row_ptr[1..].iter().map(|p| p + base));
        let mut col_idx = self.col_idx.clone();
        col_idx.extend_from_slice(&other.col_idx);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        CsrMatrix { rows: self.rows + other.rows, cols: self.cols, row_ptr, col_idx, values }
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(j, x)| (i, *j, *x))
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Whether the sparsity pattern and values are symmetric to within
    /// `rel_tol · ‖M‖_F`; returns the relative asymmetry.
    pub fn relative_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut diff = 0.0;
        for i in 0..self.rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                let ja = ca.get(a).copied().unwrap_or(usize::MAX);
                let jb = cb.get(b).copied().unwrap_or(usize::MAX);
                let d = if ja == jb {
                    let d = va[a] - vb[b];
                    a += 1;
                    b += 1;
                    d
                } else if ja < jb {
                    a += 1;
                    va[a - 1]
                } else {
                    b += 1;
                    vb[b - 1]
                };
                diff += d * d;
            }
        }
        let f = self.frobenius_norm();
        if f == 0.0 {
            0.0
        } else {
            libm::sqrt(diff) / f
        }
    }

    /// `(M + Mᵀ)/2`, canonical.
    pub fn symmetrized(&self) -> CsrMatrix {
        let t = self.transpose();
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * self.nnz());
        trip.extend(self.triplets().map(|(i, j, v)| (i, j, 0.5 * v)));
        trip.extend(t.triplets().map(|(i, j, v)| (i, j, 0.5 * v)));
        CsrMatrix::from_triplets(self.rows, self.cols, &trip).expect("in bounds")
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalized() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, -1.0), (0, 1, 1.0)])
            .unwrap();
        assert_eq!(m.row_ptr(), &[0, 1, 2]);
        assert_eq!(m.col_idx(), &[1, 0]);
        assert_eq!(m.values(), &[3.0, 3.0]);
    }

    #[test]
    fn transpose_and_products() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.to_dense(), m.to_dense().transpose());
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![1.0, -1.0, 2.0]);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }
}
