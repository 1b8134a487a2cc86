//! QP data model: `min ½zᵀPz + qᵀz  s.t.  Az = b, Cz ≤ d`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ProblemError;
use crate::linalg::dense::dot;
use crate::linalg::spd::{spd_factorize, SpdKind, SpdStrategy};
use crate::linalg::{CsrMatrix, DenseMatrix, Matrix};

/// Asymmetry below this is float noise and fixed silently.
pub const SILENT_SYMMETRY_TOL: f64 = 1e-12;
/// Asymmetry up to this is reported and symmetrized; above it is rejected.
pub const MAX_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageMode {
    Dense,
    SparseCsr,
}

impl StorageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StorageMode::Dense => "dense",
            StorageMode::SparseCsr => "sparse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    p: Matrix,
    q: Vec<f64>,
    a: Matrix,
    b: Vec<f64>,
    c: Matrix,
    d: Vec<f64>,
    storage_mode: StorageMode,
    asymmetry: f64,
}

fn to_mode(m: Matrix, mode: StorageMode) -> Matrix {
    match (mode, m) {
        (StorageMode::Dense, Matrix::Sparse(s)) => Matrix::Dense(s.to_dense()),
        (StorageMode::SparseCsr, Matrix::Dense(d)) => Matrix::Sparse(CsrMatrix::from_dense(&d)),
        (StorageMode::SparseCsr, Matrix::Sparse(s)) => {
            // canonicalize (no stored zeros, sorted, summed)
            let trip: Vec<_> = s.triplets().collect();
            Matrix::Sparse(CsrMatrix::from_triplets(s.rows(), s.cols(), &trip).expect("in bounds"))
        }
        (_, m) => m,
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<(), ProblemError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ProblemError::NonFinite { what })
    }
}

fn check_dims(what: &'static str, expected: usize, found: usize) -> Result<(), ProblemError> {
    if expected == found {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch { what, expected, found })
    }
}

/// Validates and canonicalizes problem data. `P` must be given with both
/// triangles; see [`expand_upper`] for upper-only sparse input.
pub fn build_problem(
    p: Matrix,
    q: Vec<f64>,
    a: Matrix,
    b: Vec<f64>,
    c: Matrix,
    d: Vec<f64>,
    storage_mode: StorageMode,
) -> Result<QpProblem, ProblemError> {
    let n = q.len();
    check_dims("P rows", n, p.rows())?;
    check_dims("P cols", n, p.cols())?;
    check_dims("A cols", n, a.cols())?;
    check_dims("b", a.rows(), b.len())?;
    check_dims("C cols", n, c.cols())?;
    check_dims("d", c.rows(), d.len())?;
    check_finite("P", p.values())?;
    check_finite("q", &q)?;
    check_finite("A", a.values())?;
    check_finite("b", &b)?;
    check_finite("C", c.values())?;
    check_finite("d", &d)?;

    let p = to_mode(p, storage_mode);
    let a = to_mode(a, storage_mode);
    let c = to_mode(c, storage_mode);
    let (p, asymmetry) = symmetrize(p)?;
    Ok(QpProblem { p, q, a, b, c, d, storage_mode, asymmetry })
}

fn symmetrize(p: Matrix) -> Result<(Matrix, f64), ProblemError> {
    match p {
        Matrix::Dense(mut m) => {
            let asym = m.relative_asymmetry();
            if asym > MAX_SYMMETRY_TOL {
                return Err(ProblemError::Asymmetric { asymmetry: asym });
            }
            m.symmetrize();
            Ok((Matrix::Dense(m), asym))
        }
        Matrix::Sparse(m) => {
            let asym = m.relative_asymmetry();
            if asym > MAX_SYMMETRY_TOL {
                return Err(ProblemError::Asymmetric { asymmetry: asym });
            }
            let sym = if asym == 0.0 { m } else { m.symmetrized() };
            Ok((Matrix::Sparse(sym), asym))
        }
    }
}

/// Expands a sparse matrix holding only its upper triangle into full storage.
pub fn expand_upper(upper: &CsrMatrix) -> Result<CsrMatrix, ProblemError> {
    let mut trip = Vec::with_capacity(2 * upper.nnz());
    for (i, j, v) in upper.triplets() {
        if j < i {
            return Err(ProblemError::StorageMismatch("upper-triangular P has an entry below the diagonal"));
        }
        trip.push((i, j, v));
        if i != j {
            trip.push((j, i, v));
        }
    }
    Ok(CsrMatrix::from_triplets(upper.rows(), upper.cols(), &trip)?)
}

impl QpProblem {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Number of equality rows `p`.
    pub fn num_eq(&self) -> usize {
        self.b.len()
    }

    /// Number of inequality rows `m`.
    pub fn num_ineq(&self) -> usize {
        self.d.len()
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn storage_mode(&self) -> StorageMode {
        self.storage_mode
    }

    /// Relative asymmetry `‖P − Pᵀ‖_F / ‖P‖_F` of the input before symmetrization.
    pub fn input_asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// True when the input asymmetry exceeded float noise and was repaired.
    pub fn symmetrization_reported(&self) -> bool {
        self.asymmetry > SILENT_SYMMETRY_TOL
    }

    pub fn to_storage(&self, mode: StorageMode) -> QpProblem {
        QpProblem {
            p: to_mode(self.p.clone(), mode),
            q: self.q.clone(),
            a: to_mode(self.a.clone(), mode),
            b: self.b.clone(),
            c: to_mode(self.c.clone(), mode),
            d: self.d.clone(),
            storage_mode: mode,
            asymmetry: self.asymmetry,
        }
    }

    /// Replaces the data vectors `q`, `b`, `d` (same dimensions).
    pub fn with_vectors(&self, q: Vec<f64>, b: Vec<f64>, d: Vec<f64>) -> Result<QpProblem, ProblemError> {
        check_dims("q", self.n(), q.len())?;
        check_dims("b", self.num_eq(), b.len())?;
        check_dims("d", self.num_ineq(), d.len())?;
        let mut out = self.clone();
        out.q = q;
        out.b = b;
        out.d = d;
        Ok(out)
    }

    /// Replaces the matrices; they are revalidated and converted to this
    /// problem's storage mode.
    pub fn with_matrices(&self, p: Matrix, a: Matrix, c: Matrix) -> Result<QpProblem, ProblemError> {
        build_problem(p, self.q.clone(), a, self.b.clone(), c, self.d.clone(), self.storage_mode)
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let pz = self.p.mul_vec(z);
        0.5 * dot(z, &pz) + dot(&self.q, z)
    }

    /// `Cz − d`.
    pub fn inequality_slack(&self, z: &[f64]) -> Vec<f64> {
        let mut s = self.c.mul_vec(z);
        for (si, di) in s.iter_mut().zip(&self.d) {
            *si -= di;
        }
        s
    }

    /// `Az − b`.
    pub fn equality_residual(&self, z: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(z);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    /// `Pz + q + Aᵀν + Cᵀμ`.
    pub fn stationarity(&self, z: &[f64], nu: &[f64], mu: &[f64]) -> Vec<f64> {
        let mut g = self.p.mul_vec(z);
        for (gi, qi) in g.iter_mut().zip(&self.q) {
            *gi += qi;
        }
        self.a.tr_mul_vec_acc(nu, &mut g);
        self.c.tr_mul_vec_acc(mu, &mut g);
        g
    }
}

/// Cholesky test for `P ≻ 0`: succeeds iff every pivot exceeds
/// `1e-12 · max diag(P)`. If `P` is too large to factor within the default
/// memory budget, falls back to `probe_count` seeded Rayleigh-quotient probes.
pub fn check_positive_definite(problem: &QpProblem, probe_count: usize) -> bool {
    let p = problem.p();
    let n = problem.n();
    if n == 0 {
        return true;
    }
    let diag = p.diagonal();
    let max_diag = diag.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(max_diag > 0.0) || diag.iter().any(|v| !(*v > 0.0)) {
        return false;
    }
    let threshold = 1e-12 * max_diag;
    let strategy = SpdStrategy::default();
    match spd_factorize(p, &strategy) {
        Ok(f) if f.kind() != SpdKind::CgOperator => f.min_pivot() > threshold,
        Ok(_) => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..probe_count.max(1)).all(|_| {
                let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                let pv = p.mul_vec(&v);
                dot(&v, &pv) > threshold * dot(&v, &v)
            })
        }
        Err(_) => false,
    }
}

/// Gradient (or direction) with respect to every data block. For sparse
/// problems the matrix blocks live on the stored sparsity pattern of the
/// corresponding data matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DataGradient {
    pub dp: Matrix,
    pub dq: Vec<f64>,
    pub da: Matrix,
    pub db: Vec<f64>,
    pub dc: Matrix,
    pub dd: Vec<f64>,
}

fn zeros_on_pattern(m: &Matrix) -> Matrix {
    match m {
        Matrix::Dense(d) => Matrix::Dense(DenseMatrix::zeros(d.rows(), d.cols())),
        Matrix::Sparse(s) => {
            let mut z = s.clone();
            z.values_mut().iter_mut().for_each(|v| *v = 0.0);
            Matrix::Sparse(z)
        }
    }
}

fn matrix_values_mut(m: &mut Matrix) -> &mut [f64] {
    match m {
        Matrix::Dense(d) => d.as_mut_slice(),
        Matrix::Sparse(s) => s.values_mut(),
    }
}

impl DataGradient {
    /// All-zero gradient shaped (and patterned) like `problem`.
    pub fn zeros_like(problem: &QpProblem) -> DataGradient {
        DataGradient {
            dp: zeros_on_pattern(problem.p()),
            dq: vec![0.0; problem.n()],
            da: zeros_on_pattern(problem.a()),
            db: vec![0.0; problem.num_eq()],
            dc: zeros_on_pattern(problem.c()),
            dd: vec![0.0; problem.num_ineq()],
        }
    }

    /// Blocks in the order P, q, A, b, C, d.
    pub fn blocks(&self) -> [&[f64]; 6] {
        [self.dp.values(), &self.dq, self.da.values(), &self.db, self.dc.values(), &self.dd]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 6] {
        [
            matrix_values_mut(&mut self.dp),
            &mut self.dq,
            matrix_values_mut(&mut self.da),
            &mut self.db,
            matrix_values_mut(&mut self.dc),
            &mut self.dd,
        ]
    }

    /// Concatenation of all stored values.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in self.blocks() {
            out.extend_from_slice(b);
        }
        out
    }

    /// Frobenius inner product over all blocks (stored entries).
    pub fn inner(&self, other: &DataGradient) -> f64 {
        self.blocks().iter().zip(other.blocks().iter()).map(|(a, b)| dot(a, b)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// A seeded random direction on the problem's pattern, with `dP` symmetric.
    pub fn random_like(problem: &QpProblem, seed: u64) -> DataGradient {
        let mut g = DataGradient::zeros_like(problem);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for block in g.blocks_mut() {
            for v in block.iter_mut() {
                *v = rng.random::<f64>() * 2.0 - 1.0;
            }
        }
        g.dp = match &g.dp {
            Matrix::Dense(d) => {
                let mut s = d.clone();
                s.symmetrize();
                Matrix::Dense(s)
            }
            Matrix::Sparse(s) => {
                let mut sym = s.clone();
                let t = s.transpose();
                let (rp, ci) = (s.row_ptr().to_vec(), s.col_idx().to_vec());
                for i in 0..s.rows() {
                    for p in rp[i]..rp[i + 1] {
                        let j = ci[p];
                        sym.values_mut()[p] = 0.5 * (s.values()[p] + t.get(i, j));
                    }
                }
                Matrix::Sparse(sym)
            }
        };
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[Vec<f64>]) -> Matrix {
        Matrix::Dense(DenseMatrix::from_rows(rows).unwrap())
    }

    fn empty(n: usize) -> Matrix {
        Matrix::Dense(DenseMatrix::zeros(0, n))
    }

    #[test]
    fn unconstrained_problem_is_valid() {
        let pr = build_problem(
            dense(&[vec![2.0, 0.0], vec![0.0, 2.0]]),
            vec![0.0, 0.0],
            empty(2),
            vec![],
            empty(2),
            vec![],
            StorageMode::Dense,
        )
        .unwrap();
        assert_eq!((pr.n(), pr.num_eq(), pr.num_ineq()), (2, 0, 0));
        assert!(check_positive_definite(&pr, 4));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let pr = build_problem(
            dense(&[vec![2.0, 1.0], vec![1.0 + 1e-13, 2.0]]),
            vec![0.0, 0.0],
            empty(2),
            vec![],
            empty(2),
            vec![],
            StorageMode::Dense,
        )
        .unwrap();
        assert_eq!(pr.p().get(0, 1), pr.p().get(1, 0));
        assert!((pr.p().get(0, 1) - 1.0).abs() < 1e-12);
        assert!(!pr.symmetrization_reported());
    }

    #[test]
    fn moderate_asymmetry_is_reported_gross_is_rejected() {
        let build = |eps: f64| {
            build_problem(
                dense(&[vec![2.0, 1.0], vec![1.0 + eps, 2.0]]),
                vec![0.0, 0.0],
                empty(2),
                vec![],
                empty(2),
                vec![],
                StorageMode::SparseCsr,
            )
        };
        assert!(build(1e-8).unwrap().symmetrization_reported());
        assert!(matches!(build(1e-3), Err(ProblemError::Asymmetric { .. })));
    }

    #[test]
    fn dimension_and_finiteness_checks() {
        let p = dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = build_problem(p.clone(), vec![0.0; 3], empty(2), vec![], empty(2), vec![], StorageMode::Dense);
        assert!(matches!(err, Err(ProblemError::DimensionMismatch { .. })));
        let err = build_problem(p, vec![0.0, f64::NAN], empty(2), vec![], empty(2), vec![], StorageMode::Dense);
        assert!(matches!(err, Err(ProblemError::NonFinite { what: "q" })));
    }

    #[test]
    fn indefinite_p_is_detected() {
        let pr = build_problem(
            dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            vec![0.0, 0.0],
            empty(2),
            vec![],
            empty(2),
            vec![],
            StorageMode::Dense,
        )
        .unwrap();
        assert!(!check_positive_definite(&pr, 4));
    }

    #[test]
    fn sparse_mode_drops_explicit_zeros() {
        let pr = build_problem(
            dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            vec![0.0, 0.0],
            dense(&[vec![1.0, 0.0]]),
            vec![1.0],
            empty(2),
            vec![],
            StorageMode::SparseCsr,
        )
        .unwrap();
        assert_eq!(pr.p().nnz(), 2);
        assert_eq!(pr.a().values(), &[1.0]);
    }

    #[test]
    fn upper_expansion() {
        let up = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 1, 2.0)]).unwrap();
        let full = expand_upper(&up).unwrap();
        assert_eq!(full.get(1, 0), 0.5);
        let bad = CsrMatrix::from_triplets(2, 2, &[(1, 0, 1.0)]).unwrap();
        assert!(expand_upper(&bad).is_err());
    }
}
