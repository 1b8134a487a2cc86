//! Solves with symmetric indefinite (saddle-point) matrices.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::{norm2, DenseCholesky, DenseLu, DenseMatrix};
use super::ldl::SparseLdlSymbolic;
use super::sparse::CsrMatrix;
use crate::error::LinalgError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Direct,
    LeastSquaresDamped,
}

#[derive(Clone, Debug)]
pub struct IndefiniteSolution {
    pub x: DenseMatrix,
    /// `‖K X − RHS‖_F / ‖RHS‖_F` (zero when `RHS = 0`).
    pub residual: f64,
    pub mode: SolveMode,
    /// First LU pivot flagged as numerically zero, if any.
    pub singular_pivot: Option<usize>,
}

/// Relative LU pivot threshold used to declare singularity.
pub fn default_pivot_tolerance(n: usize) -> f64 {
    4.0 * (n.max(16) as f64) * f64::EPSILON
}

/// LU with partial pivoting; if a pivot is numerically zero (or the result
/// is not finite) falls back to `(KᵀK + λI) X = Kᵀ RHS` with
/// `λ = damping · max diag(KᵀK)`.
pub fn indefinite_solve(k: &DenseMatrix, rhs: &DenseMatrix, damping: f64) -> Result<IndefiniteSolution, LinalgError> {
    indefinite_solve_with_tolerance(k, rhs, damping, default_pivot_tolerance(k.rows()))
}

pub fn indefinite_solve_with_tolerance(
    k: &DenseMatrix,
    rhs: &DenseMatrix,
    damping: f64,
    pivot_tol: f64,
) -> Result<IndefiniteSolution, LinalgError> {
    if !k.is_square() {
        return Err(LinalgError::NotSquare { rows: k.rows(), cols: k.cols() });
    }
    if rhs.rows() != k.rows() {
        return Err(LinalgError::DimensionMismatch { expected: k.rows(), found: rhs.rows() });
    }
    let lu = DenseLu::factor(k, pivot_tol)?;
    let singular_pivot = lu.singular_index();
    if !lu.is_singular() {
        let mut x = rhs.clone();
        lu.solve_matrix_in_place(&mut x);
        if x.as_slice().iter().all(|v| v.is_finite()) {
            let residual = relative_residual(k, &x, rhs);
            return Ok(IndefiniteSolution { x, residual, mode: SolveMode::Direct, singular_pivot });
        }
    }
    let x = damped_least_squares(k, rhs, damping)?;
    let residual = relative_residual(k, &x, rhs);
    Ok(IndefiniteSolution { x, residual, mode: SolveMode::LeastSquaresDamped, singular_pivot })
}

fn damped_least_squares(k: &DenseMatrix, rhs: &DenseMatrix, damping: f64) -> Result<DenseMatrix, LinalgError> {
    let n = k.rows();
    let mut normal = k.tr_matmul(k);
    let scale = normal.diagonal().iter().fold(0.0f64, |m, v| m.max(*v)).max(f64::MIN_POSITIVE);
    let mut lambda = damping.max(f64::EPSILON) * scale;
    let chol = loop {
        let mut m = normal.clone();
        for i in 0..n {
            m.add_to(i, i, lambda);
        }
        match DenseCholesky::factor(&m, 0.0) {
            Ok(c) => break c,
            Err(e) => {
                if lambda > scale {
                    return Err(e);
                }
                lambda *= 10.0;
            }
        }
    };
    normal = k.tr_matmul(rhs);
    chol.solve_matrix_in_place(&mut normal);
    Ok(normal)
}

pub fn relative_residual(k: &DenseMatrix, x: &DenseMatrix, rhs: &DenseMatrix) -> f64 {
    let mut r = k.matmul(x);
    r.axpy_assign(-1.0, rhs);
    let b = rhs.frobenius_norm();
    if b == 0.0 {
        r.frobenius_norm()
    } else {
        r.frobenius_norm() / b
    }
}

/// Regularized `LDLᵀ` solve for a quasi-definite-structured symmetric `K`
/// (full storage): the first `n_pos` diagonal entries are shifted by `+reg`,
/// the rest by `−reg`, and the regularized factor is used as a
/// preconditioner for iterative refinement against the unregularized `K`.
/// This tolerates a singular (2,2) block, e.g. duplicated constraint rows.
#[derive(Clone, Debug)]
pub struct QuasiDefiniteSolver {
    k: CsrMatrix,
    ldl: super::ldl::SparseLdl,
}

impl QuasiDefiniteSolver {
    pub fn new(k: &CsrMatrix, n_pos: usize, reg: f64) -> Result<Self, LinalgError> {
        Self::new_with_shifts(k, n_pos, reg, reg)
    }

    /// As [`QuasiDefiniteSolver::new`] with separate primal and dual shifts.
    pub fn new_with_shifts(k: &CsrMatrix, n_pos: usize, primal_reg: f64, dual_reg: f64) -> Result<Self, LinalgError> {
        let n = k.rows();
        let shift: Vec<f64> = (0..n).map(|i| if i < n_pos { primal_reg } else { -dual_reg }).collect();
        let kreg = super::spd::csr_add(k, &CsrMatrix::from_diagonal(&shift));
        let symbolic = SparseLdlSymbolic::analyze(&kreg)?;
        let ldl = symbolic.factor(kreg.values(), Some(n_pos))?;
        Ok(QuasiDefiniteSolver { k: k.clone(), ldl })
    }

    /// Solves with up to `refine` refinement steps; returns the solution and
    /// its relative residual.
    pub fn solve(&self, b: &[f64], refine: usize) -> (Vec<f64>, f64) {
        let bnorm = norm2(b);
        let mut x = self.ldl.solve(b);
        let mut r = vec![0.0; b.len()];
        let mut res = self.residual_into(&x, b, &mut r);
        for _ in 0..refine {
            if res <= 1e-15 * bnorm {
                break;
            }
            let dx = self.ldl.solve(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let mut r2 = vec![0.0; b.len()];
            let res2 = self.residual_into(&trial, b, &mut r2);
            if !(res2 < res) {
                break;
            }
            x = trial;
            r = r2;
            res = res2;
        }
        (x, if bnorm == 0.0 { res } else { res / bnorm })
    }

    fn residual_into(&self, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
        self.k.mul_vec_into(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm2(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let rhs = DenseMatrix::from_fn(4, 2, |i, j| (i + 3 * j) as f64);
        let s = indefinite_solve(&DenseMatrix::identity(4), &rhs, 1e-10).unwrap();
        assert_eq!(s.mode, SolveMode::Direct);
        assert_eq!(s.x, rhs);
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn duplicated_row_takes_least_squares_path() {
        // [I Bᵀ; B 0] with B = [1 1; 1 1] (duplicate constraint rows).
        let k = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        let rhs = DenseMatrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let s = indefinite_solve(&k, &rhs, 1e-10).unwrap();
        assert_eq!(s.mode, SolveMode::LeastSquaresDamped);
        assert!(s.x.as_slice().iter().all(|v| v.is_finite()));
        // consistent system: primal part is unique, (0.5, -0.5)
        assert!((s.x.get(0, 0) - 0.5).abs() < 1e-6);
        assert!((s.x.get(1, 0) + 0.5).abs() < 1e-6);
        assert!(s.residual < 1e-6);
    }

    #[test]
    fn quasi_definite_solver_handles_duplicate_rows() {
        let k = CsrMatrix::from_dense(
            &DenseMatrix::from_rows(&[
                vec![2.0, 0.0, 1.0, 1.0],
                vec![0.0, 2.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.0, 0.0],
            ])
            .unwrap(),
        );
        let solver = QuasiDefiniteSolver::new(&k, 2, 1e-9).unwrap();
        let (x, res) = solver.solve(&[1.0, 3.0, 1.0, 1.0], 20);
        assert!(res < 1e-8, "{res}");
        assert!((x[0] + x[1] - 1.0).abs() < 1e-8);
        assert!((x[0] - x[1] + 1.0).abs() < 1e-6);
    }
}
