//! Penalty Hessian `H = P + (1/δ)BᵀWB [+ E_δ]` at the forward solution.

use alloc::vec::Vec;

use crate::active_set::ActiveSet;
use crate::error::{Error, LinalgError, Result};
use crate::linalg::matrix::weighted_gram_sparse;
use crate::linalg::ordering::dense_degree_threshold;
use crate::linalg::spd::{csr_add, split_dense_rows};
use crate::linalg::{
    spd_factorize_system, weighted_gram, DenseMatrix, Matrix, SpdFactor,
    SpdStrategy, SpdSystem,
};
use crate::penalty::PenaltyConfig;
use crate::problem::QpProblem;
use crate::softplus::softplus_second;

#[derive(Clone, Debug)]
pub struct PenaltyHessian {
    /// `H` as a base matrix plus an optional explicit low-rank part for dense rows.
    pub h: SpdSystem,
    /// `[A; C_𝒜]`
    pub b: Matrix,
    /// `diag(ρ/2·I_p, α/4·I_|𝒜|)`
    pub w: Vec<f64>,
    pub delta: f64,
    /// `α C_ℐᵀ diag(p_δ″(s_ℐ)) C_ℐ`, present only without pruning.
    pub e_delta: Option<Matrix>,
    pub factorization: SpdFactor,
    /// Set when the observed margin is below
    /// [`PenaltyConfig::margin_warning_threshold`].
    pub margin_warning: bool,
}

impl PenaltyHessian {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn min_pivot(&self) -> f64 {
        self.factorization.min_pivot()
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factorization.solve_vec(r)?)
    }
}

/// Stacks `[A; C_𝒜]`.
pub fn active_jacobian(problem: &QpProblem, active: &ActiveSet) -> Matrix {
    problem.a().vstack(&problem.c().select_rows(&active.active_rows))
}

pub fn active_weights(problem: &QpProblem, active: &ActiveSet, config: &PenaltyConfig) -> Vec<f64> {
    let mut w = Vec::with_capacity(problem.num_eq() + active.num_active());
    w.extend(core::iter::repeat(0.5 * config.rho).take(problem.num_eq()));
    w.extend(core::iter::repeat(0.25 * config.alpha).take(active.num_active()));
    w
}

pub fn assemble_hessian(
    problem: &QpProblem,
    active: &ActiveSet,
    config: &PenaltyConfig,
) -> Result<PenaltyHessian> {
    assemble_hessian_with(problem, active, config, &SpdStrategy::default())
}

pub fn assemble_hessian_with(
    problem: &QpProblem,
    active: &ActiveSet,
    config: &PenaltyConfig,
    strategy: &SpdStrategy,
) -> Result<PenaltyHessian> {
    config.validate()?;
    let inv_delta = 1.0 / config.delta;
    let b = active_jacobian(problem, active);
    let w = active_weights(problem, active, config);

    // All curvature rows U with weights: (1/δ)W on B, then α p″(s_ℐ) on C_ℐ.
    let mut rows = b.clone();
    let mut weights: Vec<f64> = w.iter().map(|wi| wi * inv_delta).collect();
    let mut e_delta = None;
    if !config.prune_inactive && !active.inactive_rows.is_empty() {
        let ci = problem.c().select_rows(&active.inactive_rows);
        let wi: Vec<f64> = active
            .inactive_rows
            .iter()
            .map(|&i| config.alpha * softplus_second(active.slack[i], config.delta))
            .collect();
        e_delta = Some(weighted_gram(&ci, &wi));
        rows = rows.vstack(&ci);
        weights.extend(wi);
    }
    let keep: Vec<usize> = (0..rows.rows()).filter(|&k| weights[k] > 0.0).collect();
    if keep.len() < rows.rows() {
        rows = rows.select_rows(&keep);
        weights = keep.iter().map(|&k| weights[k]).collect();
    }

    let h = match problem.p() {
        Matrix::Dense(p) => {
            let g = weighted_gram(&rows, &weights).to_dense();
            let mut h = p.clone();
            h.add_assign(&g);
            SpdSystem::new(Matrix::Dense(h))
        }
        Matrix::Sparse(p) => {
            let n = problem.n();
            let (sparse_rows, dense_rows) = split_dense_rows(&rows, dense_degree_threshold(n));
            let csr = rows.to_csr();
            let gram = weighted_gram_sparse(&csr, &weights, Some(&sparse_rows));
            let base = Matrix::Sparse(csr_add(p, &gram));
            let low_rank = if dense_rows.is_empty() {
                None
            } else {
                let mut u = DenseMatrix::zeros(dense_rows.len(), n);
                for (t, &k) in dense_rows.iter().enumerate() {
                    rows.for_each_in_row(k, |j, v| u.set(t, j, v));
                }
                Some((u, dense_rows.iter().map(|&k| weights[k]).collect()))
            };
            SpdSystem { base, low_rank }
        }
    };
    let factorization = spd_factorize_system(h.clone(), strategy).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { index, pivot } => Error::HessianFactorization { index, pivot },
        other => Error::Linalg(other),
    })?;
    let margin_warning = !active.inactive_rows.is_empty() && active.margin < config.margin_warning_threshold();
    Ok(PenaltyHessian { h, b, w, delta: config.delta, e_delta, factorization, margin_warning })
}
