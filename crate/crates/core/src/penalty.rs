//! Penalty weights and the exact (nonsmooth) penalty objective
//! `F(z) = f(z) + ρ‖Az − b‖₁ + α‖[Cz − d]₊‖₁`.

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::problem::QpProblem;
use crate::solver::QpSolution;

pub const DEFAULT_DELTA: f64 = 1e-6;
pub const DEFAULT_ZETA: f64 = 10.0;
/// Lower bound on `ρ` and `α`.
pub const WEIGHT_FLOOR: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyConfig {
    pub delta: f64,
    pub zeta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub prune_inactive: bool,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            delta: DEFAULT_DELTA,
            zeta: DEFAULT_ZETA,
            rho: WEIGHT_FLOOR,
            alpha: WEIGHT_FLOOR,
            prune_inactive: true,
        }
    }
}

impl PenaltyConfig {
    pub fn new(delta: f64, zeta: f64, prune_inactive: bool) -> Result<Self> {
        let c = PenaltyConfig { delta, zeta, prune_inactive, ..Default::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidSetting("delta must be positive"));
        }
        if !(self.zeta >= 1.0 && self.zeta.is_finite()) {
            return Err(Error::InvalidSetting("zeta must be at least 1"));
        }
        Ok(())
    }

    /// Margin below which the inactive-row terms may not be negligible:
    /// `10·δ·log(1/δ)`.
    pub fn margin_warning_threshold(&self) -> f64 {
        10.0 * self.delta * libm::log(1.0 / self.delta)
    }
}

/// `ρ = max(ζ‖ν*‖∞, 1)`, `α = max(ζ‖μ*‖∞, 1)`; other fields come from `config`.
pub fn set_penalty_weights(solution: &QpSolution, zeta: f64, config: &PenaltyConfig) -> PenaltyConfig {
    PenaltyConfig {
        zeta,
        rho: (zeta * norm_inf(&solution.nu)).max(WEIGHT_FLOOR),
        alpha: (zeta * norm_inf(&solution.mu)).max(WEIGHT_FLOOR),
        ..*config
    }
}

pub fn exact_penalty_objective(problem: &QpProblem, z: &[f64], rho: f64, alpha: f64) -> f64 {
    let eq: f64 = problem.equality_residual(z).iter().map(|r| r.abs()).sum();
    let ineq: f64 = problem.inequality_slack(z).iter().map(|s| s.max(0.0)).sum();
    problem.objective(z) + rho * eq + alpha * ineq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Status;
    use alloc::vec;
    use alloc::vec::Vec;

    fn sol(nu: Vec<f64>, mu: Vec<f64>) -> QpSolution {
        QpSolution {
            z: Vec::new(),
            nu,
            mu,
            status: Status::Optimal,
            primal_residual: 0.0,
            dual_residual: 0.0,
            complementarity_residual: 0.0,
            iterations: 0,
            polished: false,
        }
    }

    #[test]
    fn weights_follow_multipliers_with_floor() {
        let c = set_penalty_weights(&sol(vec![0.3, -2.0], vec![0.0, 1.5]), 10.0, &PenaltyConfig::default());
        assert_eq!((c.rho, c.alpha), (20.0, 15.0));
        let c = set_penalty_weights(&sol(vec![0.0], vec![0.0]), 10.0, &PenaltyConfig::default());
        assert_eq!((c.rho, c.alpha), (1.0, 1.0));
        let c = set_penalty_weights(&sol(vec![1e-9], vec![]), 10.0, &PenaltyConfig::default());
        assert_eq!(c.rho, 1.0);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(PenaltyConfig::new(0.0, 10.0, true).is_err());
        assert!(PenaltyConfig::new(1e-6, 0.5, true).is_err());
        assert!(PenaltyConfig::new(1e-6, 1.0, false).is_ok());
    }
}
