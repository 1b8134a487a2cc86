//! Smoothed-penalty backward pass.
//!
//! At the forward solution the constraints are replaced by the softplus
//! smoothed exact penalty, whose Hessian `H` is SPD whenever `P` is. The
//! sensitivity `Z = ∂z*/∂θ` then solves `H Z = rhs`; see [`rhs`] for the
//! per-datum right-hand sides and [`vjp`] for the single-solve reverse mode.

pub mod hessian;
pub mod rhs;

use alloc::vec;
use alloc::vec::Vec;

pub use hessian::{assemble_hessian, assemble_hessian_with, PenaltyHessian};
pub use rhs::{assemble_rhs, RhsAssembly};

use crate::active_set::{classify_active_set, ActiveSet};
use crate::error::{Error, Result};
use crate::linalg::{spd_solve, DenseMatrix, Matrix, SpdStrategy};
use crate::params::ParamBlock;
use crate::penalty::{set_penalty_weights, PenaltyConfig};
use crate::problem::{DataGradient, QpProblem};
use crate::softplus::softplus_eval;
use crate::solver::QpSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensitivityMode {
    FullJacobian,
    Vjp,
    Jvp,
}

#[derive(Clone, Debug)]
pub struct SensitivityResult {
    pub mode: SensitivityMode,
    pub jacobian_blocks: Option<Vec<(ParamBlock, DenseMatrix)>>,
    pub vjp_gradient: Option<DataGradient>,
    pub jvp_direction_result: Option<Vec<f64>>,
    /// Adjoint `u = H⁻¹ r` (VJP only).
    pub u: Option<Vec<f64>>,
}

impl SensitivityResult {
    /// The Jacobian of the first (usually only) block.
    pub fn jacobian(&self) -> Option<&DenseMatrix> {
        self.jacobian_blocks.as_ref().and_then(|b| b.first()).map(|(_, j)| j)
    }
}

/// Everything the backward pass needs beyond the problem and solution.
#[derive(Clone, Debug)]
pub struct PenaltyContext {
    pub active: ActiveSet,
    pub config: PenaltyConfig,
    pub hessian: PenaltyHessian,
}

/// Classifies the active set, sets `(ρ, α)` from the multipliers and
/// factorizes `H`.
pub fn prepare(
    problem: &QpProblem,
    solution: &QpSolution,
    eps_active: f64,
    config: &PenaltyConfig,
    strategy: &SpdStrategy,
) -> Result<PenaltyContext> {
    solution.require_optimal()?;
    let active = classify_active_set(problem, solution, eps_active);
    let config = set_penalty_weights(solution, config.zeta, config);
    let hessian = assemble_hessian_with(problem, &active, &config, strategy)?;
    Ok(PenaltyContext { active, config, hessian })
}

/// `Z = H⁻¹ rhs`
pub fn solve_jacobian(hessian: &PenaltyHessian, rhs: &RhsAssembly) -> Result<SensitivityResult> {
    let z = spd_solve(&hessian.factorization, &rhs.rhs())?;
    Ok(SensitivityResult {
        mode: SensitivityMode::FullJacobian,
        jacobian_blocks: Some(vec![(rhs.block, z)]),
        vjp_gradient: None,
        jvp_direction_result: None,
        u: None,
    })
}

/// Penalty Jacobian `∂z*/∂block`, `n × s`.
pub fn penalty_jacobian(problem: &QpProblem, solution: &QpSolution, ctx: &PenaltyContext, block: ParamBlock) -> Result<DenseMatrix> {
    let rhs = assemble_rhs(problem, solution, &ctx.active, &ctx.config, block)?;
    let res = solve_jacobian(&ctx.hessian, &rhs)?;
    Ok(res.jacobian_blocks.and_then(|mut b| b.pop()).map(|(_, j)| j).expect("one block"))
}

/// Per inactive row: weight on `C_iᵀC_i` and the multiplier proxy, both zero
/// when pruned. Active rows get `(α/4δ, μᵢ)`.
fn row_coefficients(problem: &QpProblem, solution: &QpSolution, active: &ActiveSet, config: &PenaltyConfig) -> (Vec<f64>, Vec<f64>) {
    let m = problem.num_ineq();
    let mut weight = vec![0.0; m];
    let mut mult = vec![0.0; m];
    for i in 0..m {
        if active.is_active(i) {
            weight[i] = 0.25 * config.alpha / config.delta;
            mult[i] = solution.mu[i];
        } else if !config.prune_inactive {
            let sp = softplus_eval(active.slack[i], config.delta);
            weight[i] = config.alpha * sp.second;
            mult[i] = config.alpha * sp.first;
        }
    }
    (weight, mult)
}

fn fill_matrix_gradient(target: &mut Matrix, mut f: impl FnMut(usize, usize) -> f64) {
    match target {
        Matrix::Dense(d) => {
            for i in 0..d.rows() {
                for j in 0..d.cols() {
                    d.set(i, j, f(i, j));
                }
            }
        }
        Matrix::Sparse(s) => {
            let rp = s.row_ptr().to_vec();
            let ci = s.col_idx().to_vec();
            let vals = s.values_mut();
            for i in 0..rp.len() - 1 {
                for k in rp[i]..rp[i + 1] {
                    vals[k] = f(i, ci[k]);
                }
            }
        }
    }
}

/// Reverse mode: one solve `H u = r`, then every data gradient in closed form.
pub fn vjp(
    hessian: &PenaltyHessian,
    problem: &QpProblem,
    solution: &QpSolution,
    active: &ActiveSet,
    config: &PenaltyConfig,
    r: &[f64],
) -> Result<SensitivityResult> {
    let n = problem.n();
    if r.len() != n {
        return Err(Error::Shape("r must have length n"));
    }
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidSetting("r must be finite"));
    }
    let u = hessian.solve(r)?;
    let z = &solution.z;
    let mut grad = DataGradient::zeros_like(problem);
    grad.dq = u.iter().map(|v| -v).collect();
    fill_matrix_gradient(&mut grad.dp, |i, j| -0.5 * (u[i] * z[j] + u[j] * z[i]));

    let eq_scale = 0.5 * config.rho / config.delta;
    grad.db = problem.a().mul_vec(&u).into_iter().map(|v| eq_scale * v).collect();
    let (weight, mult) = row_coefficients(problem, solution, active, config);
    let cu = problem.c().mul_vec(&u);
    grad.dd = (0..problem.num_ineq()).map(|i| weight[i] * cu[i]).collect();

    let (nu, db, dd) = (&solution.nu, grad.db.clone(), grad.dd.clone());
    fill_matrix_gradient(&mut grad.da, |j, k| -nu[j] * u[k] - db[j] * z[k]);
    fill_matrix_gradient(&mut grad.dc, |i, k| -mult[i] * u[k] - dd[i] * z[k]);
    Ok(SensitivityResult {
        mode: SensitivityMode::Vjp,
        jacobian_blocks: None,
        vjp_gradient: Some(grad),
        jvp_direction_result: None,
        u: Some(u),
    })
}

/// Forward mode along a data direction: one solve `H ż = R(direction)`.
pub fn jvp(
    hessian: &PenaltyHessian,
    problem: &QpProblem,
    solution: &QpSolution,
    active: &ActiveSet,
    config: &PenaltyConfig,
    direction: &DataGradient,
) -> Result<SensitivityResult> {
    let n = problem.n();
    let p = problem.num_eq();
    let m = problem.num_ineq();
    let d = direction;
    if d.dq.len() != n || d.db.len() != p || d.dd.len() != m {
        return Err(Error::Shape("direction vector blocks do not match the problem"));
    }
    let shapes = [(&d.dp, n, n), (&d.da, p, n), (&d.dc, m, n)];
    if shapes.iter().any(|(mat, r, c)| mat.rows() != *r || mat.cols() != *c) {
        return Err(Error::Shape("direction matrix blocks do not match the problem"));
    }
    let z = &solution.z;
    let mut v: Vec<f64> = d.dq.iter().map(|x| -x).collect();
    for i in 0..n {
        d.dp.for_each_in_row(i, |j, val| {
            v[i] -= 0.5 * val * z[j];
            v[j] -= 0.5 * val * z[i];
        });
    }
    let eq_scale = 0.5 * config.rho / config.delta;
    for j in 0..p {
        let coef = eq_scale * (d.db[j] - d.da.row_dot(j, z));
        problem.a().row_axpy(j, coef, &mut v);
        d.da.row_axpy(j, -solution.nu[j], &mut v);
    }
    let (weight, mult) = row_coefficients(problem, solution, active, config);
    for i in 0..m {
        if weight[i] == 0.0 && mult[i] == 0.0 {
            continue;
        }
        let coef = weight[i] * (d.dd[i] - d.dc.row_dot(i, z));
        problem.c().row_axpy(i, coef, &mut v);
        d.dc.row_axpy(i, -mult[i], &mut v);
    }
    let zdot = hessian.solve(&v)?;
    Ok(SensitivityResult {
        mode: SensitivityMode::Jvp,
        jacobian_blocks: None,
        vjp_gradient: None,
        jvp_direction_result: Some(zdot),
        u: None,
    })
}

/// `η = (1/δ) W (B Z + g_θ)`, an estimate of `∂θ(ν*, μ*_𝒜)`.
pub fn dual_sensitivity(hessian: &PenaltyHessian, rhs: &RhsAssembly, jacobian: &DenseMatrix) -> DenseMatrix {
    let k = hessian.b.rows();
    let s = jacobian.cols();
    let mut eta = DenseMatrix::zeros(k, s);
    for r in 0..k {
        let scale = hessian.w[r] / hessian.delta;
        for col in 0..s {
            let mut bz = 0.0;
            hessian.b.for_each_in_row(r, |j, v| bz += v * jacobian.get(j, col));
            eta.set(r, col, scale * (bz + rhs.g_theta.get(r, col)));
        }
    }
    eta
}
