//! Storage-agnostic matrix wrapper used by the problem data and assembly code.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::{weighted_gram_dense, DenseMatrix};
use super::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Matrix {
    pub fn zeros_like_mode(sparse: bool, rows: usize, cols: usize) -> Matrix {
        if sparse {
            Matrix::Sparse(CsrMatrix::zeros(rows, cols))
        } else {
            Matrix::Dense(DenseMatrix::zeros(rows, cols))
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows(),
            Matrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.cols(),
            Matrix::Sparse(m) => m.cols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m.get(i, j),
            Matrix::Sparse(m) => m.get(i, j),
        }
    }

    /// Number of nonzero entries (dense storage counts actual nonzeros).
    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.as_slice().iter().filter(|v| **v != 0.0).count(),
            Matrix::Sparse(m) => m.nnz(),
        }
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        match self {
            Matrix::Dense(m) => m.row(i).iter().filter(|v| **v != 0.0).count(),
            Matrix::Sparse(m) => m.row(i).0.len(),
        }
    }

    /// Calls `f(j, a_ij)` for every nonzero of row `i`.
    #[inline]
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Matrix::Dense(m) => {
                for (j, v) in m.row(i).iter().enumerate() {
                    if *v != 0.0 {
                        f(j, *v);
                    }
                }
            }
            Matrix::Sparse(m) => {
                let (c, v) = m.row(i);
                for (j, x) in c.iter().zip(v) {
                    f(*j, *x);
                }
            }
        }
    }

    /// `a_i · x`
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Matrix::Dense(m) => super::dense::dot(m.row(i), x),
            Matrix::Sparse(m) => {
                let (c, v) = m.row(i);
                c.iter().zip(v).map(|(j, a)| a * x[*j]).sum()
            }
        }
    }

    /// `y += s · a_i`
    pub fn row_axpy(&self, i: usize, s: f64, y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => super::dense::axpy(s, m.row(i), y),
            Matrix::Sparse(m) => {
                let (c, v) = m.row(i);
                for (j, a) in c.iter().zip(v) {
                    y[*j] += s * a;
                }
            }
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.mul_vec_into(x, y),
            Matrix::Sparse(m) => m.mul_vec_into(x, y),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn tr_mul_vec_acc(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.tr_mul_vec_acc(x, y),
            Matrix::Sparse(m) => m.tr_mul_vec_acc(x, y),
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols()];
        self.tr_mul_vec_acc(x, &mut y);
        y
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        match self {
            Matrix::Dense(m) => Matrix::Dense(m.select_rows(idx)),
            Matrix::Sparse(m) => Matrix::Sparse(m.select_rows(idx)),
        }
    }

    /// Stacks two matrices; the result is sparse if either input is.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        match (self, other) {
            (Matrix::Dense(a), Matrix::Dense(b)) => Matrix::Dense(a.vstack(b)),
            _ => Matrix::Sparse(self.to_csr().vstack(&other.to_csr())),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            Matrix::Dense(m) => CsrMatrix::from_dense(m),
            Matrix::Sparse(m) => m.clone(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        match self {
            Matrix::Dense(m) => Matrix::Dense(m.transpose()),
            Matrix::Sparse(m) => Matrix::Sparse(m.transpose()),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Matrix::Dense(m) => m.frobenius_norm(),
            Matrix::Sparse(m) => m.frobenius_norm(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Matrix::Dense(m) => m.max_abs(),
            Matrix::Sparse(m) => m.max_abs(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Matrix::Dense(m) => m.diagonal(),
            Matrix::Sparse(m) => m.diagonal(),
        }
    }

    /// Stored values in storage order (row-major for dense).
    pub fn values(&self) -> &[f64] {
        match self {
            Matrix::Dense(m) => m.as_slice(),
            Matrix::Sparse(m) => m.values(),
        }
    }
}

/// `Bᵀ diag(w) B` in the storage mode of `B`. Dense output is bitwise
/// symmetric; sparse output accumulates mirrored entries in the same order,
/// so it is symmetric as well.
pub fn weighted_gram(b: &Matrix, w: &[f64]) -> Matrix {
    let n = b.cols();
    match b {
        Matrix::Dense(bd) => {
            let mut out = DenseMatrix::zeros(n, n);
            weighted_gram_dense(bd, w, &mut out);
            Matrix::Dense(out)
        }
        Matrix::Sparse(bs) => Matrix::Sparse(weighted_gram_sparse(bs, w, None)),
    }
}

/// Sparse `Bᵀ diag(w) B`, optionally summing over the listed rows only.
pub fn weighted_gram_sparse(b: &CsrMatrix, w: &[f64], rows: Option<&[usize]>) -> CsrMatrix {
    let n = b.cols();
    let mut trip = Vec::new();
    let mut push_row = |k: usize| {
        let (c, v) = b.row(k);
        let wk = w[k];
        for (a, &i) in c.iter().enumerate() {
            let s = wk * v[a];
            trip.push((i, i, s * v[a]));
            for (bb, &j) in c.iter().enumerate().skip(a + 1) {
                let x = s * v[bb];
                trip.push((i, j, x));
                trip.push((j, i, x));
            }
        }
    };
    match rows {
        Some(list) => list.iter().for_each(|&k| push_row(k)),
        None => (0..b.rows()).for_each(&mut push_row),
    }
    CsrMatrix::from_triplets(n, n, &trip).expect("gram indices in bounds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_of_single_row() {
        let b = Matrix::Dense(DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap());
        let g = weighted_gram(&b, &[2.0]).to_dense();
        assert_eq!(g.as_slice(), &[2.0, 2.0, 2.0, 2.0]);
        let empty = Matrix::Sparse(CsrMatrix::zeros(0, 3));
        assert_eq!(weighted_gram(&empty, &[]).nnz(), 0);
    }

    #[test]
    fn sparse_gram_matches_dense() {
        let d = DenseMatrix::from_fn(7, 5, |i, j| if (i + 2 * j) % 3 == 0 { (i as f64) - 0.3 * j as f64 } else { 0.0 });
        let w: Vec<f64> = (0..7).map(|k| 0.5 + k as f64).collect();
        let gd = weighted_gram(&Matrix::Dense(d.clone()), &w).to_dense();
        let gs = weighted_gram(&Matrix::Sparse(CsrMatrix::from_dense(&d)), &w);
        let gs_dense = gs.to_dense();
        for i in 0..5 {
            for j in 0..5 {
                assert!((gd.get(i, j) - gs_dense.get(i, j)).abs() <= 1e-14 * (1.0 + gd.get(i, j).abs()));
                assert_eq!(gs_dense.get(i, j).to_bits(), gs_dense.get(j, i).to_bits());
            }
        }
    }
}
