//! Reference sensitivities for validating the penalty backward pass:
//! differentiation of the reduced (active-set) KKT system, of the full KKT
//! system, and central finite differences of re-solved problems.
//!
//! These routines are written against the KKT conditions directly and share
//! no right-hand-side code with [`crate::backward`].

use alloc::vec;
use alloc::vec::Vec;

use crate::active_set::ActiveSet;
use crate::error::{Error, Result};
use crate::linalg::dense::DenseLu;
use crate::linalg::{
    indefinite_solve, norm2, CsrMatrix, DenseMatrix, Matrix, QuasiDefiniteSolver, SolveMode,
};
use crate::params::{block_entries, ParamBlock};
use crate::problem::{DataGradient, QpProblem};
use crate::solver::polish::{saddle_csr, saddle_dense};
use crate::solver::{QpSolution, SolverRegistry, SolverSettings};

/// Damping of the least-squares fallback for singular reduced systems.
pub const KKT_DAMPING: f64 = 1e-10;
/// Relative pivot size below which the full system counts as singular.
pub const FULL_KKT_PIVOT_TOL: f64 = 1e-11;
/// Sparse problems with more unknowns than this use a sparse quasi-definite
/// factorization for the reduced system instead of dense LU.
pub const SPARSE_REDUCED_MIN_DIM: usize = 1500;
const SPARSE_REFINE: usize = 10;

#[derive(Clone, Debug)]
pub struct KktJacobian {
    pub dz: DenseMatrix,
    pub dnu: DenseMatrix,
    pub dmu_active: DenseMatrix,
    pub solve_mode: SolveMode,
    pub residual: f64,
}

/// Stacked `[A; C_𝒜]` and `y* = (ν*, μ*_𝒜)`.
fn reduced_rows(problem: &QpProblem, solution: &QpSolution, active: &ActiveSet) -> (Matrix, Vec<f64>) {
    let b = problem.a().vstack(&problem.c().select_rows(&active.active_rows));
    let mut y = solution.nu.clone();
    y.extend(active.active_rows.iter().map(|&i| solution.mu[i]));
    (b, y)
}

/// `∂θ` of the reduced KKT residual `[Pz + q + Bᵀy; g(z)]`, one column per
/// parameter of `block`.
fn reduced_rhs(problem: &QpProblem, solution: &QpSolution, active: &ActiveSet, block: ParamBlock) -> DenseMatrix {
    let n = problem.n();
    let p = problem.num_eq();
    let z = &solution.z;
    let entries = block_entries(problem, block);
    let mut rhs = DenseMatrix::zeros(n + p + active.num_active(), entries.len());
    for (col, &(i, j)) in entries.iter().enumerate() {
        match block {
            ParamBlock::Q => rhs.set(i, col, 1.0),
            ParamBlock::P => {
                rhs.add_to(i, col, 0.5 * z[j]);
                rhs.add_to(j, col, 0.5 * z[i]);
            }
            ParamBlock::B => rhs.set(n + i, col, -1.0),
            ParamBlock::D => {
                if let Some(t) = active.active_position(i) {
                    rhs.set(n + p + t, col, -1.0);
                }
            }
            ParamBlock::A => {
                rhs.set(j, col, solution.nu[i]);
                rhs.set(n + i, col, z[j]);
            }
            ParamBlock::C => {
                if let Some(t) = active.active_position(i) {
                    rhs.set(j, col, solution.mu[i]);
                    rhs.set(n + p + t, col, z[j]);
                }
            }
        }
    }
    rhs
}

fn split_solution(x: &DenseMatrix, n: usize, p: usize) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let s = x.cols();
    let k = x.rows() - n;
    let take = |lo: usize, len: usize| DenseMatrix::from_fn(len, s, |r, c| -x.get(lo + r, c));
    (take(0, n), take(n, p), take(n + p, k - p))
}

fn use_sparse(problem: &QpProblem, dim: usize) -> bool {
    problem.p().is_sparse() && dim > SPARSE_REDUCED_MIN_DIM
}

fn sparse_reduced(problem: &QpProblem, b: &Matrix) -> Result<QuasiDefiniteSolver> {
    let k = saddle_csr(problem.p(), b);
    let scale = problem.p().diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(QuasiDefiniteSolver::new(&k, problem.n(), 1e-10 * scale)?)
}

/// Differentiates `[P Bᵀ; B 0] [ż; ẏ] = −∂θ[Pz + q + Bᵀy; g]` on the active set.
/// Singular systems (degenerate active sets) fall back to damped least squares.
pub fn kkt_jacobian_reduced(
    problem: &QpProblem,
    solution: &QpSolution,
    active: &ActiveSet,
    block: ParamBlock,
) -> Result<KktJacobian> {
    let n = problem.n();
    let p = problem.num_eq();
    let (b, _) = reduced_rows(problem, solution, active);
    let rhs = reduced_rhs(problem, solution, active, block);
    let dim = n + b.rows();
    if use_sparse(problem, dim) {
        let solver = sparse_reduced(problem, &b)?;
        let mut x = DenseMatrix::zeros(dim, rhs.cols());
        let mut worst = 0.0f64;
        for c in 0..rhs.cols() {
            let (col, res) = solver.solve(&rhs.column(c), SPARSE_REFINE);
            worst = worst.max(res);
            x.set_column(c, &col);
        }
        let (dz, dnu, dmu_active) = split_solution(&x, n, p);
        return Ok(KktJacobian { dz, dnu, dmu_active, solve_mode: SolveMode::Direct, residual: worst });
    }
    let k = saddle_dense(problem.p(), &b);
    let sol = indefinite_solve(&k, &rhs, KKT_DAMPING)?;
    let (dz, dnu, dmu_active) = split_solution(&sol.x, n, p);
    Ok(KktJacobian { dz, dnu, dmu_active, solve_mode: sol.mode, residual: sol.residual })
}

/// Reduced-KKT reverse mode: solves `K [w_z; w_y] = [r; 0]` once and
/// contracts against every parameter.
pub fn kkt_vjp(problem: &QpProblem, solution: &QpSolution, active: &ActiveSet, r: &[f64]) -> Result<(DataGradient, SolveMode)> {
    let n = problem.n();
    let p = problem.num_eq();
    if r.len() != n {
        return Err(Error::Shape("r must have length n"));
    }
    let (b, _) = reduced_rows(problem, solution, active);
    let dim = n + b.rows();
    let mut e = vec![0.0; dim];
    e[..n].copy_from_slice(r);
    let (w, mode) = if use_sparse(problem, dim) {
        (sparse_reduced(problem, &b)?.solve(&e, SPARSE_REFINE).0, SolveMode::Direct)
    } else {
        let k = saddle_dense(problem.p(), &b);
        let rhs = DenseMatrix::from_row_major(dim, 1, e).expect("shape");
        let sol = indefinite_solve(&k, &rhs, KKT_DAMPING)?;
        (sol.x.column(0), sol.mode)
    };
    let (wz, wy) = w.split_at(n);
    let z = &solution.z;
    let mut g = DataGradient::zeros_like(problem);
    g.dq = wz.iter().map(|v| -v).collect();
    g.db = wy[..p].to_vec();
    for (t, &i) in active.active_rows.iter().enumerate() {
        g.dd[i] = wy[p + t];
    }
    set_on_pattern(&mut g.dp, |i, j| -0.5 * (wz[i] * z[j] + wz[j] * z[i]));
    set_on_pattern(&mut g.da, |j, k| -(wz[k] * solution.nu[j] + wy[j] * z[k]));
    set_on_pattern(&mut g.dc, |i, k| match active.active_position(i) {
        Some(t) => -(wz[k] * solution.mu[i] + wy[p + t] * z[k]),
        None => 0.0,
    });
    Ok((g, mode))
}

fn set_on_pattern(m: &mut Matrix, f: impl Fn(usize, usize) -> f64) {
    let entries = crate::params::matrix_entries(m);
    match m {
        Matrix::Dense(d) => entries.into_iter().for_each(|(i, j)| d.set(i, j, f(i, j))),
        Matrix::Sparse(s) => {
            for (k, (i, j)) in entries.into_iter().enumerate() {
                s.values_mut()[k] = f(i, j);
            }
        }
    }
}

/// Differentiates the full system `U(z, ν, μ) = [Pz + q + Aᵀν + Cᵀμ; Az − b; μ∘(Cz − d)] = 0`
/// without reducing to the active set. Weakly active rows (`slack = μ = 0`)
/// make the matrix singular, which is reported as [`Error::SingularKkt`].
pub fn kkt_jacobian_full(problem: &QpProblem, solution: &QpSolution, block: ParamBlock) -> Result<KktJacobian> {
    let n = problem.n();
    let p = problem.num_eq();
    let m = problem.num_ineq();
    let z = &solution.z;
    let mu = &solution.mu;
    let dim = n + p + m;
    let slack = problem.inequality_slack(z);

    let mut k = DenseMatrix::zeros(dim, dim);
    let pd = problem.p().to_dense();
    for i in 0..n {
        k.row_mut(i)[..n].copy_from_slice(pd.row(i));
    }
    for j in 0..p {
        problem.a().for_each_in_row(j, |c, v| {
            k.set(n + j, c, v);
            k.set(c, n + j, v);
        });
    }
    for i in 0..m {
        problem.c().for_each_in_row(i, |c, v| {
            k.set(c, n + p + i, v);
            k.set(n + p + i, c, mu[i] * v);
        });
        k.set(n + p + i, n + p + i, slack[i]);
    }

    let entries = block_entries(problem, block);
    let mut rhs = DenseMatrix::zeros(dim, entries.len());
    for (col, &(i, j)) in entries.iter().enumerate() {
        match block {
            ParamBlock::Q => rhs.set(i, col, 1.0),
            ParamBlock::P => {
                rhs.add_to(i, col, 0.5 * z[j]);
                rhs.add_to(j, col, 0.5 * z[i]);
            }
            ParamBlock::B => rhs.set(n + i, col, -1.0),
            ParamBlock::D => rhs.set(n + p + i, col, -mu[i]),
            ParamBlock::A => {
                rhs.set(j, col, solution.nu[i]);
                rhs.set(n + i, col, z[j]);
            }
            ParamBlock::C => {
                rhs.set(j, col, mu[i]);
                rhs.set(n + p + i, col, mu[i] * z[j]);
            }
        }
    }

    let lu = DenseLu::factor(&k, FULL_KKT_PIVOT_TOL)?;
    if let Some(index) = lu.singular_index() {
        return Err(Error::SingularKkt { index, pivot: lu.min_abs_pivot() });
    }
    let mut x = rhs.clone();
    lu.solve_matrix_in_place(&mut x);
    let residual = crate::linalg::indefinite::relative_residual(&k, &x, &rhs);
    let s = entries.len();
    let dz = DenseMatrix::from_fn(n, s, |r, c| -x.get(r, c));
    let dnu = DenseMatrix::from_fn(p, s, |r, c| -x.get(n + r, c));
    let act: Vec<usize> = (0..m).filter(|&i| mu[i] > 0.0 || slack[i] >= 0.0).collect();
    let dmu_active = DenseMatrix::from_fn(act.len(), s, |r, c| -x.get(n + p + act[r], c));
    Ok(KktJacobian { dz, dnu, dmu_active, solve_mode: SolveMode::Direct, residual })
}

/// Copy of `problem` with parameter `(i, j)` of `block` shifted by `h`. For
/// `P` the mirrored entry moves too, keeping `P` symmetric.
pub fn perturb(problem: &QpProblem, block: ParamBlock, i: usize, j: usize, h: f64) -> Result<QpProblem> {
    let shift = |m: &Matrix, both: bool| -> Matrix {
        let mut out = m.clone();
        match &mut out {
            Matrix::Dense(d) => {
                d.add_to(i, j, h);
                if both && i != j {
                    d.add_to(j, i, h);
                }
            }
            Matrix::Sparse(s) => {
                let mut trip: Vec<(usize, usize, f64)> = s.triplets().collect();
                trip.push((i, j, h));
                if both && i != j {
                    trip.push((j, i, h));
                }
                *s = CsrMatrix::from_triplets(s.rows(), s.cols(), &trip).expect("in bounds");
            }
        }
        out
    };
    let (pm, am, cm) = (problem.p(), problem.a(), problem.c());
    let out = match block {
        ParamBlock::Q | ParamBlock::B | ParamBlock::D => {
            let (mut q, mut b, mut d) = (problem.q().to_vec(), problem.b().to_vec(), problem.d().to_vec());
            match block {
                ParamBlock::Q => q[i] += h,
                ParamBlock::B => b[i] += h,
                _ => d[i] += h,
            }
            problem.with_vectors(q, b, d)?
        }
        ParamBlock::P => problem.with_matrices(shift(pm, true), am.clone(), cm.clone())?,
        ParamBlock::A => problem.with_matrices(pm.clone(), shift(am, false), cm.clone())?,
        ParamBlock::C => problem.with_matrices(pm.clone(), am.clone(), shift(cm, false))?,
    };
    Ok(out)
}

/// Central differences `(z*(θ + h eₖ) − z*(θ − h eₖ)) / 2h` per parameter,
/// re-solving with `tight_settings`. Off-diagonal `P` entries are perturbed
/// jointly with their mirror and the quotient halved, which gives the
/// symmetrized derivative.
pub fn finite_difference_jacobian(
    problem: &QpProblem,
    block: ParamBlock,
    h: f64,
    tight_settings: &SolverSettings,
    solver_choice: &str,
) -> Result<DenseMatrix> {
    let registry = SolverRegistry::default();
    let entries = block_entries(problem, block);
    let n = problem.n();
    let mut jac = DenseMatrix::zeros(n, entries.len());
    for (col, &(i, j)) in entries.iter().enumerate() {
        let solve_at = |step: f64| -> Result<Vec<f64>> {
            let pert = perturb(problem, block, i, j, step)?;
            let sol = registry.solve(&pert, tight_settings, solver_choice)?;
            if !sol.is_optimal() {
                return Err(Error::PerturbedSolveFailed { index: col });
            }
            Ok(sol.z)
        };
        let plus = solve_at(h)?;
        let minus = solve_at(-h)?;
        let mut denom = 2.0 * h;
        if block == ParamBlock::P && i != j {
            denom *= 2.0;
        }
        for r in 0..n {
            jac.set(r, col, (plus[r] - minus[r]) / denom);
        }
    }
    Ok(jac)
}

/// `‖g_a − g_b‖₂ / ‖g_b‖₂` over flattened entries.
pub fn relative_discrepancy(g_a: &[f64], g_b: &[f64]) -> Result<f64> {
    if g_a.len() != g_b.len() {
        return Err(Error::Shape("relative_discrepancy arguments differ in length"));
    }
    let denom = norm2(g_b);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: Vec<f64> = g_a.iter().zip(g_b).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrepancy_examples() {
        let b = [1.0, -2.0, 3.0];
        assert_eq!(relative_discrepancy(&b, &b).unwrap(), 0.0);
        let a: Vec<f64> = b.iter().map(|v| 1.01 * v).collect();
        assert!((relative_discrepancy(&a, &b).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(relative_discrepancy(&a, &[0.0; 3]), Err(Error::ZeroReference));
    }
}
