//! Row-major dense matrices and the dense factorizations used throughout the
//! crate: Cholesky, square-root-free LDLᵀ for quasi-definite systems, and LU
//! with partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::LinalgError;

/// Number of right-hand sides processed together by the blocked triangular
/// solves. Eight lanes keeps one cache line of each row of the block hot.
const RHS_BLOCK: usize = 8;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        // Tiled to keep both source and destination lines in cache.
        const TILE: usize = 32;
        for ib in (0..self.rows).step_by(TILE) {
            for jb in (0..self.cols).step_by(TILE) {
                for i in ib..(ib + TILE).min(self.rows) {
                    for j in jb..(jb + TILE).min(self.cols) {
                        t.data[j * self.rows + i] = self.data[i * self.cols + j];
                    }
                }
            }
        }
        t
    }

    /// `y = self * x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            *yi = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y += selfᵀ * x`
    pub fn tr_mul_vec_acc(&self, x: &[f64], y: &mut [f64]) {
        for (i, xi) in x.iter().enumerate().take(self.rows) {
            if *xi != 0.0 {
                axpy(*xi, self.row(i), y);
            }
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.tr_mul_vec_acc(x, &mut y);
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let (a_row, out_row) = (self.row(i), &mut out.data[i * other.cols..(i + 1) * other.cols]);
            for (k, a) in a_row.iter().enumerate() {
                if *a != 0.0 {
                    axpy(*a, other.row(k), out_row);
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without forming the transpose.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "tr_matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, a) in self.row(k).iter().enumerate() {
                if *a != 0.0 {
                    axpy(*a, b_row, out.row_mut(i));
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        axpy(1.0, &other.data, &mut self.data);
    }

    pub fn axpy_assign(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        axpy(alpha, &other.data, &mut self.data);
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Copies the strict upper triangle into the strict lower triangle.
    pub fn mirror_upper(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }

    /// Replaces the matrix by `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Largest `|M_ij - M_ji|` relative to the Frobenius norm.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut diff = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.data[i * n + j] - self.data[j * n + i];
                diff += 2.0 * d * d;
            }
        }
        let f = self.frobenius_norm();
        if f == 0.0 {
            0.0
        } else {
            libm::sqrt(diff) / f
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        out
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        DenseMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }
}

/// Accumulates `out += Σ_k w_k b_k b_kᵀ` over the rows of `b`, writing only the
/// upper triangle, then mirrors it so the result is bitwise symmetric.
pub fn weighted_gram_dense(b: &DenseMatrix, w: &[f64], out: &mut DenseMatrix) {
    let n = b.cols();
    assert_eq!(out.rows(), n);
    for (k, wk) in w.iter().enumerate().take(b.rows()) {
        let row = b.row(k);
        for i in 0..n {
            let s = wk * row[i];
            if s != 0.0 {
                axpy(s, &row[i..], &mut out.row_mut(i)[i..]);
            }
        }
    }
    out.mirror_upper();
}

/// Forward solve `L y = b` for a row-major lower-triangular `L`.
fn lower_solve_in_place(l: &DenseMatrix, x: &mut [f64], unit: bool) {
    let n = l.rows();
    for i in 0..n {
        let row = l.row(i);
        let s = x[i] - dot(&row[..i], &x[..i]);
        x[i] = if unit { s } else { s / row[i] };
    }
}

/// Backward solve `Lᵀ x = y` for a row-major lower-triangular `L`, written as
/// column sweeps so the inner loop runs over contiguous rows of `L`.
fn lower_transpose_solve_in_place(l: &DenseMatrix, x: &mut [f64], unit: bool) {
    let n = l.rows();
    for i in (0..n).rev() {
        let row = l.row(i);
        if !unit {
            x[i] /= row[i];
        }
        let xi = x[i];
        if xi != 0.0 {
            axpy(-xi, &row[..i], &mut x[..i]);
        }
    }
}

/// Blocked multi-RHS variants. `block` stores `RHS_BLOCK` lanes per row
/// (row-major `n × RHS_BLOCK`).
fn lower_solve_block(l: &DenseMatrix, block: &mut [f64], unit: bool) {
    let n = l.rows();
    for i in 0..n {
        let row = l.row(i);
        let mut acc = [0.0f64; RHS_BLOCK];
        for (j, lij) in row[..i].iter().enumerate() {
            let xj = &block[j * RHS_BLOCK..(j + 1) * RHS_BLOCK];
            for lane in 0..RHS_BLOCK {
                acc[lane] += lij * xj[lane];
            }
        }
        let xi = &mut block[i * RHS_BLOCK..(i + 1) * RHS_BLOCK];
        for lane in 0..RHS_BLOCK {
            let v = xi[lane] - acc[lane];
            xi[lane] = if unit { v } else { v / row[i] };
        }
    }
}

fn lower_transpose_solve_block(l: &DenseMatrix, block: &mut [f64], unit: bool) {
    let n = l.rows();
    for i in (0..n).rev() {
        let row = l.row(i);
        let (head, tail) = block.split_at_mut(i * RHS_BLOCK);
        let xi = &mut tail[..RHS_BLOCK];
        if !unit {
            for v in xi.iter_mut() {
                *v /= row[i];
            }
        }
        for (j, lij) in row[..i].iter().enumerate() {
            if *lij != 0.0 {
                let xj = &mut head[j * RHS_BLOCK..(j + 1) * RHS_BLOCK];
                for lane in 0..RHS_BLOCK {
                    xj[lane] -= lij * xi[lane];
                }
            }
        }
    }
}

/// Applies `solve_block` to every column of `rhs` in groups of `RHS_BLOCK`.
fn solve_columns(rhs: &mut DenseMatrix, mut solve_block: impl FnMut(&mut [f64])) {
    let (n, k) = (rhs.rows(), rhs.cols());
    let mut block = vec![0.0; n * RHS_BLOCK];
    for c0 in (0..k).step_by(RHS_BLOCK) {
        let width = RHS_BLOCK.min(k - c0);
        for i in 0..n {
            let src = &rhs.row(i)[c0..c0 + width];
            let dst = &mut block[i * RHS_BLOCK..i * RHS_BLOCK + RHS_BLOCK];
            dst[..width].copy_from_slice(src);
            dst[width..].iter_mut().for_each(|v| *v = 0.0);
        }
        solve_block(&mut block);
        for i in 0..n {
            rhs.row_mut(i)[c0..c0 + width]
                .copy_from_slice(&block[i * RHS_BLOCK..i * RHS_BLOCK + width]);
        }
    }
}

/// Dense Cholesky factor `M = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct DenseCholesky {
    l: DenseMatrix,
    min_pivot: f64,
}

impl DenseCholesky {
    /// Factorizes `m` (only the lower triangle is read). A pivot `≤ tol` is
    /// reported as a failure at that index.
    pub fn factor(m: &DenseMatrix, tol: f64) -> Result<Self, LinalgError> {
        let n = m.rows();
        if !m.is_square() {
            return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let mut l = DenseMatrix::zeros(n, n);
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            let (done, rest) = l.data.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            row_i[..=i].copy_from_slice(&m.row(i)[..=i]);
            for j in 0..i {
                let row_j = &done[j * n..j * n + n];
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !(d > tol) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: i, pivot: d });
            }
            min_pivot = min_pivot.min(d);
            row_i[i] = libm::sqrt(d);
        }
        if n == 0 {
            min_pivot = f64::INFINITY;
        }
        Ok(DenseCholesky { l, min_pivot })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Smallest pivot `d_i = L_ii²` encountered.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        lower_solve_in_place(&self.l, x, false);
        lower_transpose_solve_in_place(&self.l, x, false);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `L y = b` only.
    pub fn forward_in_place(&self, x: &mut [f64]) {
        lower_solve_in_place(&self.l, x, false);
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        lower_transpose_solve_in_place(&self.l, x, false);
    }

    pub fn solve_matrix_in_place(&self, rhs: &mut DenseMatrix) {
        solve_columns(rhs, |block| {
            lower_solve_block(&self.l, block, false);
            lower_transpose_solve_block(&self.l, block, false);
        });
    }

    /// `L⁻¹ B` for a multi-column `B`.
    pub fn forward_matrix_in_place(&self, rhs: &mut DenseMatrix) {
        solve_columns(rhs, |block| lower_solve_block(&self.l, block, false));
    }
}

/// Square-root-free `M = L D Lᵀ` without pivoting. Suitable for SPD and
/// quasi-definite matrices; `expected_sign[i]` (if given) is checked against
/// the sign of each pivot.
#[derive(Clone, Debug)]
pub struct DenseLdl {
    l: DenseMatrix,
    d: Vec<f64>,
}

impl DenseLdl {
    pub fn factor(m: &DenseMatrix, expected_positive: Option<usize>) -> Result<Self, LinalgError> {
        let n = m.rows();
        if !m.is_square() {
            return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let mut l = DenseMatrix::zeros(n, n);
        let mut d = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 0..n {
            // u_j = L_ij d_j accumulated before dividing.
            for j in 0..i {
                let row_j = l.row(j);
                u[j] = m.get(i, j) - dot(&u[..j], &row_j[..j]);
            }
            let mut di = m.get(i, i);
            let row_i = l.row_mut(i);
            for j in 0..i {
                let lij = u[j] / d[j];
                row_i[j] = lij;
                di -= u[j] * lij;
            }
            row_i[i] = 1.0;
            let sign_ok = match expected_positive {
                Some(np) if i < np => di > 0.0,
                Some(_) => di < 0.0,
                None => di != 0.0,
            };
            if !sign_ok || !di.is_finite() {
                return Err(LinalgError::NotQuasiDefinite { index: i, pivot: di });
            }
            d[i] = di;
        }
        Ok(DenseLdl { l, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        lower_solve_in_place(&self.l, x, true);
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        lower_transpose_solve_in_place(&self.l, x, true);
    }
}

/// `P A = L U` with partial (row) pivoting.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    min_abs_pivot: f64,
    singular_at: Option<usize>,
}

impl DenseLu {
    /// Factorizes `a`. A pivot with `|u_kk| ≤ pivot_tol · max|a_ij|` marks the
    /// matrix as numerically singular; the factorization still completes so
    /// callers can inspect it, but `solve` should not be trusted.
    pub fn factor(a: &DenseMatrix, pivot_tol: f64) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_abs_pivot = f64::INFINITY;
        let mut singular_at = None;
        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in (k + 1)..n {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                perm.swap(p, k);
                let (lo, hi) = lu.data.split_at_mut(p * n);
                lo[k * n..k * n + n].swap_with_slice(&mut hi[..n]);
            }
            min_abs_pivot = min_abs_pivot.min(best);
            if best <= pivot_tol * scale {
                if singular_at.is_none() {
                    singular_at = Some(k);
                }
                continue;
            }
            let pivot = lu.get(k, k);
            let (upper, lower) = lu.data.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n + k + 1..k * n + n];
            for i in 0..(n - k - 1) {
                let row_i = &mut lower[i * n..(i + 1) * n];
                let factor = row_i[k] / pivot;
                row_i[k] = factor;
                if factor != 0.0 {
                    axpy(-factor, row_k, &mut row_i[k + 1..]);
                }
            }
        }
        if n == 0 {
            min_abs_pivot = f64::INFINITY;
        }
        Ok(DenseLu { lu, perm, min_abs_pivot, singular_at })
    }

    pub fn is_singular(&self) -> bool {
        self.singular_at.is_some()
    }

    pub fn singular_index(&self) -> Option<usize> {
        self.singular_at
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.min_abs_pivot
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            x[i] -= dot(&row[..i], &x[..i]);
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = x[i] - dot(&row[i + 1..], &x[i + 1..]);
            x[i] = s / row[i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve_matrix_in_place(&self, rhs: &mut DenseMatrix) {
        let n = self.perm.len();
        let permuted = DenseMatrix::from_fn(n, rhs.cols(), |i, j| rhs.get(self.perm[i], j));
        *rhs = permuted;
        solve_columns(rhs, |block| {
            lower_solve_block(&self.lu, block, true);
            // Upper solve: row-major U, rows processed bottom-up.
            for i in (0..n).rev() {
                let row = self.lu.row(i);
                let (head, tail) = block.split_at_mut((i + 1) * RHS_BLOCK);
                let xi = &mut head[i * RHS_BLOCK..];
                let mut acc = [0.0f64; RHS_BLOCK];
                for (jj, uij) in row[i + 1..].iter().enumerate() {
                    let xj = &tail[jj * RHS_BLOCK..(jj + 1) * RHS_BLOCK];
                    for lane in 0..RHS_BLOCK {
                        acc[lane] += uij * xj[lane];
                    }
                }
                for lane in 0..RHS_BLOCK {
                    xi[lane] = (xi[lane] - acc[lane]) / row[i];
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DenseMatrix {
        let b = DenseMatrix::from_fn(n, n, |i, j| libm::sin((i * 7 + j * 3) as f64) + if i == j { 0.5 } else { 0.0 });
        let mut m = b.tr_matmul(&b);
        for i in 0..n {
            m.add_to(i, i, 1.0);
        }
        m
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let m = spd(13);
        let chol = DenseCholesky::factor(&m, 0.0).unwrap();
        let b: Vec<f64> = (0..13).map(|i| i as f64 - 3.0).collect();
        let x = chol.solve(&b);
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match DenseCholesky::factor(&m, 0.0) {
            Err(LinalgError::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blocked_multi_rhs_matches_single() {
        let m = spd(21);
        let chol = DenseCholesky::factor(&m, 0.0).unwrap();
        let mut rhs = DenseMatrix::from_fn(21, 11, |i, j| (i as f64 + 1.0) * (j as f64 - 4.0));
        let orig = rhs.clone();
        chol.solve_matrix_in_place(&mut rhs);
        for j in 0..11 {
            let x = chol.solve(&orig.column(j));
            for i in 0..21 {
                assert!((x[i] - rhs.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ldl_handles_quasi_definite() {
        // [[2, 1], [1, -1]] is quasi-definite.
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let f = DenseLdl::factor(&m, Some(1)).unwrap();
        let mut x = vec![3.0, 0.0];
        f.solve_in_place(&mut x);
        let r = m.mul_vec(&x);
        assert!((r[0] - 3.0).abs() < 1e-14 && r[1].abs() < 1e-14);
    }

    #[test]
    fn lu_solves_and_flags_singular() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![4.0, -3.0, 8.0]])
            .unwrap();
        let lu = DenseLu::factor(&a, 1e-13).unwrap();
        assert!(!lu.is_singular());
        let mut b = vec![1.0, 2.0, 3.0];
        lu.solve_in_place(&mut b);
        let r = a.mul_vec(&b);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12 && (r[2] - 3.0).abs() < 1e-12);

        let mut rhs = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let orig = rhs.clone();
        lu.solve_matrix_in_place(&mut rhs);
        let back = a.matmul(&rhs);
        for i in 0..3 {
            for j in 0..2 {
                assert!((back.get(i, j) - orig.get(i, j)).abs() < 1e-12);
            }
        }

        let s = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(DenseLu::factor(&s, 1e-13).unwrap().is_singular());
    }

    #[test]
    fn weighted_gram_is_bitwise_symmetric() {
        let b = DenseMatrix::from_fn(4, 6, |i, j| libm::cos((i * 5 + j) as f64) * 1.7);
        let mut g = DenseMatrix::zeros(6, 6);
        weighted_gram_dense(&b, &[0.3, 2.0, 1.1, 7.0], &mut g);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }
}
