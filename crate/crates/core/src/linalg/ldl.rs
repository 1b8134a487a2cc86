//! Sparse square-root-free `LDLᵀ` (up-looking, elimination-tree driven).
//!
//! The symbolic phase computes a fill-reducing permutation, the elimination
//! tree and column counts once per sparsity pattern; the numeric phase can
//! then be repeated for new values on the same pattern (interior-point
//! iterations refactor the same KKT pattern every step). No pivoting is done:
//! the input must be SPD or quasi-definite.

use alloc::vec;
use alloc::vec::Vec;

use super::ordering::{invert, minimum_degree};
use super::sparse::CsrMatrix;
use crate::error::LinalgError;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct SparseLdlSymbolic {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// For each stored entry of the analyzed CSR matrix, its slot in the
    /// permuted upper-triangular CSC values (or `NONE` for mirrored entries).
    slot_of_entry: Vec<usize>,
    etree: Vec<usize>,
    l_ptr: Vec<usize>,
}

impl SparseLdlSymbolic {
    /// Analyzes a matrix given in full symmetric CSR storage.
    pub fn analyze(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let n = a.rows();
        let mut adjacency = vec![Vec::new(); n];
        for (i, j, _) in a.triplets() {
            if i != j {
                adjacency[i].push(j);
            }
        }
        let perm = minimum_degree(&adjacency);
        Self::analyze_with_perm(a, perm)
    }

    pub fn analyze_with_perm(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        if perm.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: perm.len() });
        }
        let iperm = invert(&perm);
        // Count entries per permuted column (upper triangle: row <= col).
        let mut counts = vec![0usize; n + 1];
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (iperm[i], iperm[j]);
            if pi <= pj {
                counts[pj + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; col_ptr[n]];
        let mut slot_of_entry = vec![NONE; a.nnz()];
        for (e, (i, j, _)) in a.triplets().enumerate() {
            let (pi, pj) = (iperm[i], iperm[j]);
            if pi <= pj {
                let s = next[pj];
                row_idx[s] = pi;
                slot_of_entry[e] = s;
                next[pj] += 1;
            }
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![NONE; n];
        let mut l_nz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in col_ptr[j]..col_ptr[j + 1] {
                let mut i = row_idx[p];
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    l_nz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for i in 0..n {
            l_ptr[i + 1] = l_ptr[i] + l_nz[i];
        }
        Ok(SparseLdlSymbolic { n, perm, col_ptr, row_idx, slot_of_entry, etree, l_ptr })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Nonzeros in the (permuted) upper triangle of the input, diagonal included.
    pub fn input_nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Nonzeros of `L + D`.
    pub fn factor_nnz(&self) -> usize {
        self.l_ptr[self.n] + self.n
    }

    /// Numeric factorization. `values` must follow the storage order of the
    /// analyzed CSR matrix. With `expected_positive = Some(k)`, pivots of
    /// original indices `< k` must be positive and the rest negative
    /// (quasi-definite); with `None` every pivot must be positive (SPD).
    pub fn factor(&self, values: &[f64], expected_positive: Option<usize>) -> Result<SparseLdl, LinalgError> {
        let n = self.n;
        if values.len() != self.slot_of_entry.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.slot_of_entry.len(),
                found: values.len(),
            });
        }
        let mut ax = vec![0.0; self.row_idx.len()];
        for (e, &s) in self.slot_of_entry.iter().enumerate() {
            if s != NONE {
                ax[s] += values[e];
            }
        }

        let lnz = self.l_ptr[n];
        let mut li = vec![0usize; lnz];
        let mut lx = vec![0.0; lnz];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut y_vals = vec![0.0; n];
        let mut y_marker = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim_buffer = vec![0usize; n];
        let mut next_space: Vec<usize> = self.l_ptr[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0;
            d[k] = 0.0;
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let bidx = self.row_idx[p];
                if bidx == k {
                    d[k] += ax[p];
                    continue;
                }
                y_vals[bidx] += ax[p];
                if !y_marker[bidx] {
                    y_marker[bidx] = true;
                    elim_buffer[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if y_marker[next] {
                            break;
                        }
                        y_marker[next] = true;
                        elim_buffer[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        y_idx[nnz_y] = elim_buffer[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in self.l_ptr[c]..tmp {
                    y_vals[li[j]] -= lx[j] * yc;
                }
                li[tmp] = k;
                let lkc = yc * dinv[c];
                lx[tmp] = lkc;
                d[k] -= yc * lkc;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_marker[c] = false;
            }
            let orig = self.perm[k];
            let ok = match expected_positive {
                None => d[k] > 0.0,
                Some(np) if orig < np => d[k] > 0.0,
                Some(_) => d[k] < 0.0,
            };
            if !ok || !d[k].is_finite() {
                return match expected_positive {
                    None => Err(LinalgError::NotPositiveDefinite { index: orig, pivot: d[k] }),
                    Some(_) => Err(LinalgError::NotQuasiDefinite { index: orig, pivot: d[k] }),
                };
            }
            dinv[k] = 1.0 / d[k];
        }
        Ok(SparseLdl { perm: self.perm.clone(), l_ptr: self.l_ptr.clone(), li, lx, d, dinv })
    }
}

#[derive(Clone, Debug)]
pub struct SparseLdl {
    perm: Vec<usize>,
    l_ptr: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
}

impl SparseLdl {
    pub fn factor(a: &CsrMatrix, expected_positive: Option<usize>) -> Result<Self, LinalgError> {
        SparseLdlSymbolic::analyze(a)?.factor(a.values(), expected_positive)
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Pivots in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn min_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len() + self.d.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.l_ptr[i]..self.l_ptr[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in self.l_ptr[i]..self.l_ptr[i + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[i] = s;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::DenseMatrix;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn tridiagonal_has_no_fill() {
        let a = tridiag(50);
        let sym = SparseLdlSymbolic::analyze(&a).unwrap();
        assert_eq!(sym.factor_nnz(), 50 + 49);
        let f = sym.factor(a.values(), None).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-13);
        }
    }

    #[test]
    fn quasi_definite_saddle_point() {
        // [[2, 0, 1], [0, 3, 1], [1, 1, -1e-8]]
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (1, 1, 3.0), (0, 2, 1.0), (2, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, -1e-8)],
        )
        .unwrap();
        let f = SparseLdl::factor(&a, Some(2)).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_dense_on_random_pattern() {
        let n = 30;
        let mut dense = DenseMatrix::zeros(n, n);
        for i in 0..n {
            dense.set(i, i, 10.0 + i as f64);
            for j in 0..i {
                if (i * 31 + j * 17) % 7 == 0 {
                    let v = ((i + j) as f64).cos();
                    dense.set(i, j, v);
                    dense.set(j, i, v);
                }
            }
        }
        let a = CsrMatrix::from_dense(&dense);
        let f = SparseLdl::factor(&a, None).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = f.solve(&b);
        let r = dense.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
    }

    #[test]
    fn reports_indefinite_pivot() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(SparseLdl::factor(&a, None), Err(LinalgError::NotPositiveDefinite { index: 1, .. })));
    }
}
