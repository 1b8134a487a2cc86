//! Right-hand side of the plug-in sensitivity system
//! `H Z = −(G + (∂θBᵀ)y* + (1/δ)BᵀW g_θ [+ F_δ])`, one column per parameter.

use alloc::vec::Vec;

use super::hessian::{active_jacobian, active_weights};
use crate::active_set::ActiveSet;
use crate::error::Result;
use crate::linalg::{DenseMatrix, Matrix};
use crate::params::{block_entries, ParamBlock};
use crate::penalty::PenaltyConfig;
use crate::problem::QpProblem;
use crate::softplus::softplus_eval;
use crate::solver::QpSolution;

#[derive(Clone, Debug)]
pub struct RhsAssembly {
    pub block: ParamBlock,
    /// `∇²_{zθ} f`
    pub g: DenseMatrix,
    /// `(∂θBᵀ) y*`
    pub db_t_y: DenseMatrix,
    /// `(1/δ) Bᵀ W g_θ`
    pub penalty_term: DenseMatrix,
    /// Inactive-row term; present only without pruning.
    pub f_delta: Option<DenseMatrix>,
    /// `(ν*, μ*_𝒜)`
    pub y_star: Vec<f64>,
    /// `∂θ g` at `z*`, `(p + |𝒜|) × s`.
    pub g_theta: DenseMatrix,
}

impl RhsAssembly {
    pub fn columns(&self) -> usize {
        self.g.cols()
    }

    /// `−(G + (∂θBᵀ)y* + (1/δ)BᵀW g_θ [+ F_δ])`
    pub fn rhs(&self) -> DenseMatrix {
        let mut out = self.g.clone();
        out.add_assign(&self.db_t_y);
        out.add_assign(&self.penalty_term);
        if let Some(f) = &self.f_delta {
            out.add_assign(f);
        }
        out.scale(-1.0);
        out
    }
}

pub fn assemble_rhs(
    problem: &QpProblem,
    solution: &QpSolution,
    active: &ActiveSet,
    config: &PenaltyConfig,
    block: ParamBlock,
) -> Result<RhsAssembly> {
    config.validate()?;
    let n = problem.n();
    let p = problem.num_eq();
    let z = &solution.z;
    let entries = block_entries(problem, block);
    let s = entries.len();
    let k = p + active.num_active();

    let mut y_star = solution.nu.clone();
    y_star.extend(active.active_rows.iter().map(|&i| solution.mu[i]));

    let mut g = DenseMatrix::zeros(n, s);
    let mut db_t_y = DenseMatrix::zeros(n, s);
    let mut g_theta = DenseMatrix::zeros(k, s);
    let unpruned = !config.prune_inactive && !active.inactive_rows.is_empty();
    let mut f_delta = if unpruned { Some(DenseMatrix::zeros(n, s)) } else { None };

    for (col, &(i, j)) in entries.iter().enumerate() {
        match block {
            ParamBlock::Q => g.set(i, col, 1.0),
            ParamBlock::P => {
                // symmetric-pair convention: ∂(Pz)/∂P_ij = ½(e_i z_j + e_j z_i)
                g.add_to(i, col, 0.5 * z[j]);
                g.add_to(j, col, 0.5 * z[i]);
            }
            ParamBlock::B => g_theta.set(i, col, -1.0),
            ParamBlock::A => {
                db_t_y.set(j, col, solution.nu[i]);
                g_theta.set(i, col, z[j]);
            }
            ParamBlock::D => match active.active_position(i) {
                Some(t) => g_theta.set(p + t, col, -1.0),
                None => {
                    if let Some(f) = f_delta.as_mut() {
                        let sp = softplus_eval(active.slack[i], config.delta);
                        problem.c().for_each_in_row(i, |c, v| f.add_to(c, col, -config.alpha * sp.second * v));
                    }
                }
            },
            ParamBlock::C => match active.active_position(i) {
                Some(t) => {
                    db_t_y.set(j, col, solution.mu[i]);
                    g_theta.set(p + t, col, z[j]);
                }
                None => {
                    if let Some(f) = f_delta.as_mut() {
                        let sp = softplus_eval(active.slack[i], config.delta);
                        f.add_to(j, col, config.alpha * sp.first);
                        let scale = config.alpha * sp.second * z[j];
                        problem.c().for_each_in_row(i, |c, v| f.add_to(c, col, scale * v));
                    }
                }
            },
        }
    }

    let b = active_jacobian(problem, active);
    let penalty_term = penalty_term(&b, &active_weights(problem, active, config), config.delta, &g_theta);
    Ok(RhsAssembly { block, g, db_t_y, penalty_term, f_delta, y_star, g_theta })
}

/// `(1/δ) Bᵀ W g_θ`, skipping zero entries of `g_θ`.
fn penalty_term(b: &Matrix, w: &[f64], delta: f64, g_theta: &DenseMatrix) -> DenseMatrix {
    let n = b.cols();
    let s = g_theta.cols();
    let mut out = DenseMatrix::zeros(n, s);
    for r in 0..g_theta.rows() {
        let scale = w[r] / delta;
        for (col, &gv) in g_theta.row(r).iter().enumerate() {
            if gv != 0.0 {
                b.for_each_in_row(r, |c, v| out.add_to(c, col, scale * gv * v));
            }
        }
    }
    out
}
