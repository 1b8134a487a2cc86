//! Active-set polishing of an interior-point iterate.
//!
//! Guesses the active set from the iterate (`μᵢ > sᵢ`), solves the equality
//! QP on that set
//!
//! ```text
//! [ P  Bᵀ ] [z]   [−q]
//! [ B  0  ] [y] = [ h]      B = [A; C_𝒜],  h = [b; d_𝒜]
//! ```
//!
//! with a regularized quasi-definite `LDLᵀ` used as a preconditioner for
//! iterative refinement on the unregularized matrix, and sets `μ_ℐ = 0`.
//! Rows that come out violated are added and rows with negative multipliers
//! dropped, for a few rounds.
//! Duplicated active rows leave the (2,2) block singular; refinement still
//! converges because the system is consistent.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::dense::DenseLdl;
use crate::linalg::{norm2, CsrMatrix, DenseMatrix, Matrix, QuasiDefiniteSolver};
use crate::problem::QpProblem;

const MAX_REFINE: usize = 30;
const MAX_ROUNDS: usize = 8;

pub struct Polished {
    pub z: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Returns `None` when no consistent active set is found within a few
/// corrections or the linear solve fails.
pub fn polish(problem: &QpProblem, z: &[f64], mu: &[f64], eps_abs: f64, reg_floor: f64) -> Option<Polished> {
    let m = problem.num_ineq();
    let slack = problem.inequality_slack(z);
    let mut active: Vec<bool> = (0..m).map(|i| mu[i] > -slack[i]).collect();
    for _ in 0..MAX_ROUNDS {
        let rows: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let (zp, nu, mu_rows) = solve_on(problem, &rows, reg_floor)?;
        let mut mu_out = vec![0.0; m];
        let mut changed = false;
        for (t, &i) in rows.iter().enumerate() {
            if mu_rows[t] < -eps_abs {
                active[i] = false;
                changed = true;
            }
            mu_out[i] = mu_rows[t].max(0.0);
        }
        let s = problem.inequality_slack(&zp);
        for i in 0..m {
            if !active[i] && s[i] > 0.1 * eps_abs {
                active[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Some(Polished { z: zp, nu, mu: mu_out });
        }
    }
    None
}

/// Equality-constrained solve with the given inequality rows held active.
fn solve_on(problem: &QpProblem, active: &[usize], reg_floor: f64) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = problem.n();
    let p = problem.num_eq();
    let ca = problem.c().select_rows(active);
    let b_rows = problem.a().vstack(&ca);
    let k = b_rows.rows();
    let dim = n + k;
    let mut rhs = vec![0.0; dim];
    for (r, qi) in rhs.iter_mut().zip(problem.q()) {
        *r = -qi;
    }
    rhs[n..n + p].copy_from_slice(problem.b());
    for (t, &i) in active.iter().enumerate() {
        rhs[n + p + t] = problem.d()[i];
    }
    let scale = problem.p().diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let reg = (reg_floor * scale).max(1e-12 * scale);
    let bn = norm2(&rhs);

    // A tiny dual shift makes the factor inaccurate when active rows are
    // redundant; retry with larger shifts and keep the best refined solve.
    let mut best: Option<(Vec<f64>, f64)> = None;
    for dual_reg in [reg, 1e-8 * scale, 1e-6 * scale] {
        let solved = if problem.p().is_sparse() {
            let kkt = saddle_csr(problem.p(), &b_rows);
            QuasiDefiniteSolver::new_with_shifts(&kkt, n, reg, dual_reg).ok().map(|s| s.solve(&rhs, MAX_REFINE))
        } else {
            let kkt = saddle_dense(problem.p(), &b_rows);
            let mut kreg = kkt.clone();
            for i in 0..dim {
                kreg.add_to(i, i, if i < n { reg } else { -dual_reg });
            }
            DenseLdl::factor(&kreg, Some(n)).ok().map(|ldl| refine_dense(&kkt, &ldl, &rhs))
        };
        if let Some((x, rn)) = solved {
            if rn.is_finite() && best.as_ref().map_or(true, |(_, b)| rn < *b) {
                best = Some((x, rn));
            }
            if rn <= 1e-13 * (1.0 + bn) {
                break;
            }
        }
    }
    let (x, _) = best?;
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some((x[..n].to_vec(), x[n..n + p].to_vec(), x[n + p..].to_vec()))
}

fn refine_dense(k: &DenseMatrix, ldl: &DenseLdl, b: &[f64]) -> (Vec<f64>, f64) {
    let mut x = b.to_vec();
    ldl.solve_in_place(&mut x);
    let bn = norm2(b);
    let mut r = residual(k, &x, b);
    let mut rn = norm2(&r);
    for _ in 0..MAX_REFINE {
        if rn <= 1e-15 * bn {
            break;
        }
        ldl.solve_in_place(&mut r);
        let trial: Vec<f64> = x.iter().zip(&r).map(|(a, c)| a + c).collect();
        let r2 = residual(k, &trial, b);
        let r2n = norm2(&r2);
        if !(r2n < rn) {
            break;
        }
        x = trial;
        r = r2;
        rn = r2n;
    }
    (x, rn / bn.max(f64::MIN_POSITIVE))
}

fn residual(k: &DenseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let kx = k.mul_vec(x);
    b.iter().zip(kx).map(|(a, c)| a - c).collect()
}

/// `[P Bᵀ; B 0]` in dense storage.
pub(crate) fn saddle_dense(p: &Matrix, b: &Matrix) -> DenseMatrix {
    let n = p.rows();
    let k = b.rows();
    let mut out = DenseMatrix::zeros(n + k, n + k);
    match p {
        Matrix::Dense(pd) => {
            for i in 0..n {
                out.row_mut(i)[..n].copy_from_slice(pd.row(i));
            }
        }
        Matrix::Sparse(ps) => {
            for (i, j, v) in ps.triplets() {
                out.set(i, j, v);
            }
        }
    }
    for r in 0..k {
        b.for_each_in_row(r, |j, v| {
            out.set(n + r, j, v);
            out.set(j, n + r, v);
        });
    }
    out
}

/// `[P Bᵀ; B 0]` in sparse storage.
pub(crate) fn saddle_csr(p: &Matrix, b: &Matrix) -> CsrMatrix {
    let n = p.rows();
    let k = b.rows();
    let mut trip: Vec<(usize, usize, f64)> = p.to_csr().triplets().collect();
    for r in 0..k {
        b.for_each_in_row(r, |j, v| {
            trip.push((n + r, j, v));
            trip.push((j, n + r, v));
        });
    }
    CsrMatrix::from_triplets(n + k, n + k, &trip).expect("in bounds")
}
