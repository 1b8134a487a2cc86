//! Experiment commands shared by the CLI and the acceptance suite.

pub mod bench;
pub mod gen;
pub mod gradcheck;
pub mod single;
pub mod sweep;

use std::time::Instant;

use dxpp_core::active_set::{classify_active_set, ActiveSet};
use dxpp_core::backward::{penalty_jacobian, prepare, vjp, PenaltyContext};
use dxpp_core::benchgen::{
    gen_chain_projection, gen_portfolio_qp, gen_random_qp, gen_simplex_projection, BenchInstance, Family,
};
use dxpp_core::kkt::{kkt_jacobian_reduced, kkt_vjp, relative_discrepancy};
use dxpp_core::linalg::{SolveMode, SpdStrategy};
use dxpp_core::params::ParamBlock;
use dxpp_core::penalty::PenaltyConfig;
use dxpp_core::problem::{DataGradient, QpProblem};
use dxpp_core::solver::{solve, QpSolution};

use crate::config::{parse_pair, GradMode, RunConfig};

pub type CoreResult<T> = Result<T, dxpp_core::Error>;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum CommandError {
    /// Bad flags, config or input files (exit 2).
    Usage(String),
    /// Numerical failure or an I/O problem while writing results (exit 1).
    Failure(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => EXIT_USAGE,
            CommandError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Usage(m) | CommandError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<crate::format::FormatError> for CommandError {
    fn from(e: crate::format::FormatError) -> Self {
        CommandError::Failure(e.to_string())
    }
}

pub fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Builds `family` at `size` (`"n"` or `"AxB"`, by family).
pub fn make_instance(family: Family, size: &str, seed: u64, cfg: &RunConfig) -> Result<BenchInstance, String> {
    let bad = || format!("invalid size '{size}' for family {}", family.as_str());
    let inst = match family {
        Family::RandomQp => {
            let (n, m) = parse_pair(size).ok_or_else(bad)?;
            if n == 0 {
                return Err(bad());
            }
            gen_random_qp(n, m, seed)
        }
        Family::Simplex => {
            let n: usize = size.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            gen_simplex_projection(n, seed)
        }
        Family::Chain => {
            let (points, dim) = parse_pair(size).ok_or_else(bad)?;
            if points < 2 || dim == 0 {
                return Err(bad());
            }
            gen_chain_projection(points, dim, seed)
        }
        Family::Portfolio => {
            let (horizon, assets) = parse_pair(size).ok_or_else(bad)?;
            if horizon == 0 || assets < 2 || !(cfg.risk_aversion > 0.0) || !(cfg.turnover > 0.0) {
                return Err(bad());
            }
            gen_portfolio_qp(horizon, assets, cfg.risk_aversion, cfg.turnover, seed)
        }
    };
    Ok(inst)
}

pub fn parse_family(s: &str) -> Result<Family, CommandError> {
    Family::parse(s).ok_or_else(|| CommandError::Usage(format!("unknown family '{s}'")))
}

pub fn solve_timed(problem: &QpProblem, cfg: &RunConfig) -> CoreResult<(QpSolution, f64)> {
    let t = Instant::now();
    let sol = solve(problem, &cfg.solver_settings(), &cfg.solver_choice)?;
    Ok((sol, millis(t)))
}

/// Seeded cotangent used by the VJP comparisons.
pub fn cotangent(problem: &QpProblem, seed: u64) -> Vec<f64> {
    DataGradient::random_like(problem, seed ^ 0x5eed).dq
}

/// Penalty-side gradient for `mode` (flattened), with its context and time.
pub fn penalty_gradient(
    problem: &QpProblem,
    sol: &QpSolution,
    cfg: &RunConfig,
    penalty: &PenaltyConfig,
    mode: GradMode,
    r: &[f64],
) -> CoreResult<(Vec<f64>, PenaltyContext, f64)> {
    let t = Instant::now();
    let ctx = prepare(problem, sol, cfg.eps_active, penalty, &SpdStrategy::default())?;
    let g = match mode {
        GradMode::Q => penalty_jacobian(problem, sol, &ctx, ParamBlock::Q)?.into_vec(),
        GradMode::All => {
            let res = vjp(&ctx.hessian, problem, sol, &ctx.active, &ctx.config, r)?;
            res.vjp_gradient.expect("vjp result").flatten()
        }
    };
    Ok((g, ctx, millis(t)))
}

/// KKT-reduced reference for `mode` (flattened), including active-set
/// classification in the timing.
pub fn kkt_gradient(problem: &QpProblem, sol: &QpSolution, cfg: &RunConfig, mode: GradMode, r: &[f64]) -> CoreResult<(Vec<f64>, ActiveSet, SolveMode, f64)> {
    let t = Instant::now();
    let active = classify_active_set(problem, sol, cfg.eps_active);
    let (g, mode) = match mode {
        GradMode::Q => {
            let k = kkt_jacobian_reduced(problem, sol, &active, ParamBlock::Q)?;
            (k.dz.into_vec(), k.solve_mode)
        }
        GradMode::All => {
            let (g, m) = kkt_vjp(problem, sol, &active, r)?;
            (g.flatten(), m)
        }
    };
    Ok((g, active, mode, millis(t)))
}

/// Relative discrepancy, or the absolute one when the reference vanishes.
pub fn discrepancy(a: &[f64], reference: &[f64]) -> f64 {
    match relative_discrepancy(a, reference) {
        Ok(e) => e,
        Err(_) => a.iter().zip(reference).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Human-readable degeneracy warnings at a solution.
pub fn degeneracy_warnings(problem: &QpProblem, sol: &QpSolution, ctx: &PenaltyContext, kkt_mode: Option<SolveMode>) -> Vec<String> {
    let mut out = Vec::new();
    if problem.symmetrization_reported() {
        out.push(format!("P was symmetrized (relative asymmetry {:e})", problem.input_asymmetry()));
    }
    let mu_scale = sol.mu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let weak: Vec<usize> = ctx.active.active_rows.iter().copied().filter(|&i| sol.mu[i] <= 1e-6 * mu_scale).collect();
    if !weak.is_empty() {
        out.push(format!("{} weakly active row(s) with near-zero multiplier: {:?}", weak.len(), weak));
    }
    if ctx.hessian.margin_warning {
        out.push(format!(
            "margin {:e} is below {:e}; inactive-row terms may matter (try --no-prune)",
            ctx.active.margin,
            ctx.config.margin_warning_threshold()
        ));
    }
    if kkt_mode == Some(SolveMode::LeastSquaresDamped) {
        out.push("reduced KKT system is singular (dependent active rows); reference used damped least squares".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1e3, 1e4, 1e5];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.3)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn sizes_are_checked() {
        let cfg = RunConfig::default();
        assert!(make_instance(Family::RandomQp, "10x5", 0, &cfg).is_ok());
        assert!(make_instance(Family::RandomQp, "10", 0, &cfg).is_err());
        assert!(make_instance(Family::Chain, "1x3", 0, &cfg).is_err());
        assert_eq!(make_instance(Family::Chain, "100x2", 0, &cfg).unwrap().problem.n(), 200);
    }
}
