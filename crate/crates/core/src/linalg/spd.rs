//! SPD factorization front end with automatic strategy selection.
//!
//! A system is `M = base + Uᵀ diag(w) U`, where the optional low-rank part
//! holds constraint rows that are too dense to keep in a sparse factor (for
//! example a budget row `1ᵀz = 1`). The sparse path factors `base` and
//! applies the low-rank part through a Woodbury capacitance matrix; the dense
//! path forms `M` explicitly; the CG path never forms a factor.

use alloc::vec;
use alloc::vec::Vec;

use super::cg::{pcg, CgSettings};
use super::dense::{dot, DenseCholesky, DenseMatrix};
use super::ldl::{SparseLdl, SparseLdlSymbolic};
use super::matrix::Matrix;
use super::sparse::CsrMatrix;
use crate::error::LinalgError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdKind {
    DenseCholesky,
    SparseCholesky,
    CgOperator,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdStrategy {
    /// Always factor densely at or below this dimension.
    pub dense_max_dim: usize,
    /// Factor densely when `nnz(base) / n²` exceeds this.
    pub dense_density: f64,
    /// Switch to CG when the projected factor storage exceeds this many bytes.
    pub memory_budget_bytes: usize,
    pub cg_tolerance: f64,
    /// CG iteration cap is `cg_iteration_factor · n`.
    pub cg_iteration_factor: usize,
    pub force: Option<SpdKind>,
}

impl Default for SpdStrategy {
    fn default() -> Self {
        SpdStrategy {
            dense_max_dim: 512,
            dense_density: 0.25,
            memory_budget_bytes: 2 << 30,
            cg_tolerance: 1e-10,
            cg_iteration_factor: 10,
            force: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FillStats {
    /// Nonzeros in the lower triangle of the input (diagonal included).
    pub input_nnz: usize,
    /// Nonzeros in `L + D`.
    pub factor_nnz: usize,
}

/// `base + Uᵀ diag(weights) U`; `base` must be stored with both triangles.
#[derive(Clone, Debug)]
pub struct SpdSystem {
    pub base: Matrix,
    pub low_rank: Option<(DenseMatrix, Vec<f64>)>,
}

impl SpdSystem {
    pub fn new(base: Matrix) -> Self {
        SpdSystem { base, low_rank: None }
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.base.mul_vec_into(x, out);
        if let Some((u, w)) = &self.low_rank {
            for (k, wk) in w.iter().enumerate() {
                let s = wk * dot(u.row(k), x);
                super::dense::axpy(s, u.row(k), out);
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.base.diagonal();
        if let Some((u, w)) = &self.low_rank {
            for (k, wk) in w.iter().enumerate() {
                for (di, ui) in d.iter_mut().zip(u.row(k)) {
                    *di += wk * ui * ui;
                }
            }
        }
        d
    }

    /// Explicit dense `M`.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = self.base.to_dense();
        if let Some((u, w)) = &self.low_rank {
            let mut g = DenseMatrix::zeros(m.rows(), m.cols());
            super::dense::weighted_gram_dense(u, w, &mut g);
            m.add_assign(&g);
        }
        m
    }

    fn low_rank_len(&self) -> usize {
        self.low_rank.as_ref().map_or(0, |(u, _)| u.rows())
    }
}

#[derive(Clone, Debug)]
struct Woodbury {
    u: DenseMatrix,
    /// Rows are `base⁻¹ u_j`.
    base_inv_ut: DenseMatrix,
    capacitance: DenseCholesky,
}

#[derive(Clone, Debug)]
enum Inner {
    Dense(DenseCholesky),
    Sparse { ldl: SparseLdl, system: SpdSystem, woodbury: Option<Woodbury> },
    Cg { system: SpdSystem, diagonal: Vec<f64>, settings: CgSettings },
}

#[derive(Clone, Debug)]
pub struct SpdFactor {
    kind: SpdKind,
    n: usize,
    min_pivot: f64,
    fill_stats: Option<FillStats>,
    inner: Inner,
}

impl SpdFactor {
    pub fn kind(&self) -> SpdKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest Cholesky pivot (`d_ii` of `LDLᵀ`, or `l_ii²` for the dense
    /// factor). For the CG operator this is the smallest diagonal entry.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn fill_stats(&self) -> Option<FillStats> {
        self.fill_stats
    }

    /// CG settings when the factor is an operator.
    pub fn cg_settings(&self) -> Option<CgSettings> {
        match &self.inner {
            Inner::Cg { settings, .. } => Some(*settings),
            _ => None,
        }
    }

    fn sparse_raw_solve(ldl: &SparseLdl, woodbury: &Option<Woodbury>, b: &mut [f64]) {
        ldl.solve_in_place(b);
        if let Some(wb) = woodbury {
            let mut t: Vec<f64> = (0..wb.u.rows()).map(|k| dot(wb.u.row(k), b)).collect();
            wb.capacitance.solve_in_place(&mut t);
            for (k, tk) in t.iter().enumerate() {
                super::dense::axpy(-tk, wb.base_inv_ut.row(k), b);
            }
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, found: b.len() });
        }
        match &self.inner {
            Inner::Dense(c) => Ok(c.solve(b)),
            Inner::Sparse { ldl, system, woodbury } => {
                let mut x = b.to_vec();
                Self::sparse_raw_solve(ldl, woodbury, &mut x);
                // one step of iterative refinement against the full operator
                let mut r = vec![0.0; self.n];
                system.apply(&x, &mut r);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri = bi - *ri;
                }
                Self::sparse_raw_solve(ldl, woodbury, &mut r);
                for (xi, ri) in x.iter_mut().zip(&r) {
                    *xi += ri;
                }
                Ok(x)
            }
            Inner::Cg { system, diagonal, settings } => {
                Ok(pcg(|v, o| system.apply(v, o), diagonal, b, *settings)?.x)
            }
        }
    }
}

/// Factorizes a symmetric matrix stored with both triangles.
pub fn spd_factorize(m: &Matrix, strategy: &SpdStrategy) -> Result<SpdFactor, LinalgError> {
    spd_factorize_system(SpdSystem::new(m.clone()), strategy)
}

pub fn spd_factorize_system(system: SpdSystem, strategy: &SpdStrategy) -> Result<SpdFactor, LinalgError> {
    let n = system.dim();
    if system.base.cols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: system.base.cols() });
    }
    let dense_bytes = n.saturating_mul(n).saturating_mul(8);
    let kind = match strategy.force {
        Some(k) => k,
        None => {
            let density = if n == 0 { 1.0 } else { system.base.nnz() as f64 / (n as f64 * n as f64) };
            if n <= strategy.dense_max_dim || density > strategy.dense_density {
                if dense_bytes > strategy.memory_budget_bytes {
                    SpdKind::CgOperator
                } else {
                    SpdKind::DenseCholesky
                }
            } else {
                SpdKind::SparseCholesky
            }
        }
    };
    match kind {
        SpdKind::DenseCholesky => {
            let chol = DenseCholesky::factor(&system.to_dense(), 0.0)?;
            let min_pivot = chol.min_pivot();
            Ok(SpdFactor { kind, n, min_pivot, fill_stats: None, inner: Inner::Dense(chol) })
        }
        SpdKind::SparseCholesky => {
            let csr = system.base.to_csr();
            let symbolic = SparseLdlSymbolic::analyze(&csr)?;
            let k = system.low_rank_len();
            let projected = symbolic
                .factor_nnz()
                .saturating_mul(16)
                .saturating_add(k.saturating_mul(n).saturating_mul(16));
            if strategy.force.is_none() && projected > strategy.memory_budget_bytes {
                return factor_cg(system, strategy);
            }
            let ldl = symbolic.factor(csr.values(), None)?;
            let fill = FillStats { input_nnz: symbolic.input_nnz(), factor_nnz: symbolic.factor_nnz() };
            let woodbury = match &system.low_rank {
                Some((u, w)) if u.rows() > 0 => Some(build_woodbury(&ldl, u, w)?),
                _ => None,
            };
            let min_pivot = ldl.min_pivot();
            Ok(SpdFactor {
                kind,
                n,
                min_pivot,
                fill_stats: Some(fill),
                inner: Inner::Sparse { ldl, system, woodbury },
            })
        }
        SpdKind::CgOperator => factor_cg(system, strategy),
    }
}

fn build_woodbury(ldl: &SparseLdl, u: &DenseMatrix, w: &[f64]) -> Result<Woodbury, LinalgError> {
    let k = u.rows();
    let mut base_inv_ut = u.clone();
    for j in 0..k {
        ldl.solve_in_place(base_inv_ut.row_mut(j));
    }
    // S = diag(1/w) + U base⁻¹ Uᵀ
    let mut cap = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = dot(u.row(i), base_inv_ut.row(j));
            cap.set(i, j, v);
            cap.set(j, i, v);
        }
        cap.add_to(i, i, 1.0 / w[i]);
    }
    let capacitance = DenseCholesky::factor(&cap, 0.0)?;
    Ok(Woodbury { u: u.clone(), base_inv_ut, capacitance })
}

fn factor_cg(system: SpdSystem, strategy: &SpdStrategy) -> Result<SpdFactor, LinalgError> {
    let n = system.dim();
    let diagonal = system.diagonal();
    let min_pivot = diagonal.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if let Some((index, &pivot)) = diagonal.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(LinalgError::NotPositiveDefinite { index, pivot });
    }
    let settings = CgSettings {
        tolerance: strategy.cg_tolerance,
        max_iterations: strategy.cg_iteration_factor.saturating_mul(n).max(1),
    };
    Ok(SpdFactor {
        kind: SpdKind::CgOperator,
        n,
        min_pivot,
        fill_stats: None,
        inner: Inner::Cg { system, diagonal, settings },
    })
}

/// Solves `M X = RHS` column by column (`RHS` is `n × k`).
pub fn spd_solve(factor: &SpdFactor, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if rhs.rows() != factor.n {
        return Err(LinalgError::DimensionMismatch { expected: factor.n, found: rhs.rows() });
    }
    if let Inner::Dense(c) = &factor.inner {
        let mut x = rhs.clone();
        c.solve_matrix_in_place(&mut x);
        return Ok(x);
    }
    let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
    for j in 0..rhs.cols() {
        let x = factor.solve_vec(&rhs.column(j))?;
        out.set_column(j, &x);
    }
    Ok(out)
}

/// Partitions row indices into (sparse, dense) by stored nonzeros.
pub fn split_dense_rows(rows: &Matrix, threshold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut sparse_rows = Vec::new();
    let mut dense_rows = Vec::new();
    for i in 0..rows.rows() {
        if rows.row_nnz(i) > threshold {
            dense_rows.push(i);
        } else {
            sparse_rows.push(i);
        }
    }
    (sparse_rows, dense_rows)
}

/// Adds two sparse matrices of equal shape.
pub fn csr_add(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let mut trip: Vec<(usize, usize, f64)> = a.triplets().collect();
    trip.extend(b.triplets());
    CsrMatrix::from_triplets(a.rows(), a.cols(), &trip).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_ok(m: &DenseMatrix, x: &DenseMatrix, rhs: &DenseMatrix) -> bool {
        let mx = m.matmul(x);
        (0..rhs.cols()).all(|j| {
            let r: f64 = (0..rhs.rows()).map(|i| (mx.get(i, j) - rhs.get(i, j)).powi(2)).sum();
            let b: f64 = (0..rhs.rows()).map(|i| rhs.get(i, j).powi(2)).sum();
            libm::sqrt(r) <= 1e-9 * (1.0 + libm::sqrt(b))
        })
    }

    #[test]
    fn identity_and_scaled_identity() {
        let f = spd_factorize(&Matrix::Dense(DenseMatrix::identity(5)), &SpdStrategy::default()).unwrap();
        assert_eq!(f.min_pivot(), 1.0);
        let m = Matrix::Dense(DenseMatrix::from_diagonal(&[2.0; 3]));
        let f = spd_factorize(&m, &SpdStrategy::default()).unwrap();
        let x = spd_solve(&f, &DenseMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((x.get(i, j) - want).abs() <= 2.0 * f64::EPSILON);
            }
        }
        let empty = spd_solve(&f, &DenseMatrix::zeros(3, 0)).unwrap();
        assert_eq!(empty.cols(), 0);
    }

    #[test]
    fn indefinite_reports_pivot_index() {
        let m = Matrix::Dense(DenseMatrix::from_diagonal(&[1.0, -1.0]));
        let err = spd_factorize(&m, &SpdStrategy::default()).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { index: 1, .. }));
    }

    fn arrow_system(n: usize) -> SpdSystem {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 3.0 + (i % 5) as f64));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let base = Matrix::Sparse(CsrMatrix::from_triplets(n, n, &trip).unwrap());
        let u = DenseMatrix::from_fn(2, n, |k, j| if k == 0 { 1.0 } else { (j as f64 * 0.01).sin() });
        SpdSystem { base, low_rank: Some((u, vec![1e4, 3.0])) }
    }

    #[test]
    fn all_strategies_agree_with_low_rank_part() {
        let n = 600;
        let sys = arrow_system(n);
        let dense_m = sys.to_dense();
        let rhs = DenseMatrix::from_fn(n, 2, |i, j| ((i * (j + 1)) as f64 * 0.37).cos());
        let mut solutions = Vec::new();
        for kind in [SpdKind::DenseCholesky, SpdKind::SparseCholesky, SpdKind::CgOperator] {
            let strategy = SpdStrategy { force: Some(kind), ..SpdStrategy::default() };
            let f = spd_factorize_system(sys.clone(), &strategy).unwrap();
            assert_eq!(f.kind(), kind);
            let x = spd_solve(&f, &rhs).unwrap();
            assert!(residual_ok(&dense_m, &x, &rhs), "{kind:?}");
            solutions.push(x);
        }
        let reference = &solutions[0];
        for x in &solutions[1..] {
            let mut diff = x.clone();
            diff.axpy_assign(-1.0, reference);
            assert!(diff.frobenius_norm() <= 1e-8 * reference.frobenius_norm());
        }
    }

    #[test]
    fn auto_selects_sparse_for_large_banded() {
        let sys = arrow_system(2000);
        let f = spd_factorize_system(sys, &SpdStrategy::default()).unwrap();
        assert_eq!(f.kind(), SpdKind::SparseCholesky);
        let fill = f.fill_stats().unwrap();
        assert_eq!(fill.factor_nnz, 2000 + 1999);
        assert!(f.min_pivot() > 0.0);
    }

    #[test]
    fn budget_forces_cg() {
        let sys = arrow_system(1000);
        let strategy = SpdStrategy { memory_budget_bytes: 1000, ..SpdStrategy::default() };
        let f = spd_factorize_system(sys, &strategy).unwrap();
        assert_eq!(f.kind(), SpdKind::CgOperator);
        assert_eq!(f.cg_settings().unwrap().max_iterations, 10_000);
    }
}
