//! Solve one problem file and report the solution and its sensitivities.

use std::fmt::Write;
use std::path::Path;

use dxpp_core::backward::{penalty_jacobian, prepare, vjp};
use dxpp_core::kkt::kkt_jacobian_reduced;
use dxpp_core::linalg::{DenseMatrix, Matrix, SpdStrategy};
use dxpp_core::params::ParamBlock;
use dxpp_core::solver::solve;

use super::{degeneracy_warnings, discrepancy, CommandError, EXIT_FAILURE, EXIT_OK};
use crate::config::RunConfig;
use crate::format::{read_metadata, read_problem, read_vector, sidecar_path};

/// Full Jacobians are printed up to this many variables.
pub const FULL_JACOBIAN_MAX_N: usize = 10;

pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-4..1e8).contains(&a) {
        return format!("{v:.6e}");
    }
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("({})", parts.join(", "))
}

fn fmt_matrix(out: &mut String, m: &DenseMatrix) {
    for i in 0..m.rows() {
        let _ = writeln!(out, "  {}", fmt_vec(m.row(i)));
    }
}

fn fmt_block(out: &mut String, name: &str, m: &Matrix) {
    if m.rows() * m.cols() == 0 {
        return;
    }
    if m.cols() <= FULL_JACOBIAN_MAX_N && m.rows() <= FULL_JACOBIAN_MAX_N {
        let _ = writeln!(out, "{name} =");
        fmt_matrix(out, &m.to_dense());
    } else {
        let _ = writeln!(out, "{name}: {}x{}, Frobenius norm {}", m.rows(), m.cols(), fmt_num(m.frobenius_norm()));
    }
}

/// Problem projection input recorded in the sidecar, if any.
fn projection_input(problem_path: &Path) -> Option<Vec<f64>> {
    let meta = read_metadata(&sidecar_path(problem_path)).ok()?;
    if meta.family == "simplex" || meta.family == "chain" {
        meta.input
    } else {
        None
    }
}

/// Builds the text report; the exit code is 1 on solver or backward failure.
pub fn run_single(cfg: &RunConfig, problem_path: &Path, r_path: Option<&Path>) -> Result<(String, i32), CommandError> {
    cfg.validate().map_err(CommandError::Usage)?;
    let problem = read_problem(problem_path).map_err(|e| CommandError::Usage(e.to_string()))?;
    let r = match r_path {
        Some(p) => {
            let r = read_vector(p).map_err(|e| CommandError::Usage(e.to_string()))?;
            if r.len() != problem.n() {
                return Err(CommandError::Usage(format!("r has length {}, expected {}", r.len(), problem.n())));
            }
            Some(r)
        }
        None => None,
    };
    let projection = projection_input(problem_path).filter(|x| x.len() == problem.n());
    let penalty = cfg.penalty().map_err(|e| CommandError::Usage(e.to_string()))?;

    let mut out = String::new();
    let _ = writeln!(out, "problem: n = {}, equalities = {}, inequalities = {}, storage = {}", problem.n(), problem.num_eq(), problem.num_ineq(), problem.storage_mode().as_str());
    let sol = solve(&problem, &cfg.solver_settings(), &cfg.solver_choice).map_err(|e| CommandError::Failure(e.to_string()))?;
    let _ = writeln!(
        out,
        "status: {} after {} iterations (primal {:.2e}, dual {:.2e}, complementarity {:.2e})",
        sol.status.as_str(),
        sol.iterations,
        sol.primal_residual,
        sol.dual_residual,
        sol.complementarity_residual
    );
    if !sol.is_optimal() {
        return Ok((out, EXIT_FAILURE));
    }
    let _ = writeln!(out, "z* = {}", fmt_vec(&sol.z));
    let _ = writeln!(out, "nu* = {}", fmt_vec(&sol.nu));
    let _ = writeln!(out, "mu* = {}", fmt_vec(&sol.mu));

    let ctx = match prepare(&problem, &sol, cfg.eps_active, &penalty, &SpdStrategy::default()) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "backward failed: {e}");
            return Ok((out, EXIT_FAILURE));
        }
    };
    let _ = writeln!(out, "active set: {:?} ({} of {})", ctx.active.active_rows, ctx.active.num_active(), problem.num_ineq());
    let _ = writeln!(out, "margin gamma = {}", fmt_num(ctx.active.margin));
    let _ = writeln!(out, "penalty weights: rho = {}, alpha = {}, delta = {:e}", fmt_num(ctx.config.rho), fmt_num(ctx.config.alpha), ctx.config.delta);

    let kkt = kkt_jacobian_reduced(&problem, &sol, &ctx.active, ParamBlock::Q).ok();
    for w in degeneracy_warnings(&problem, &sol, &ctx, kkt.as_ref().map(|k| k.solve_mode)) {
        let _ = writeln!(out, "warning: {w}");
    }
    let mut code = EXIT_OK;
    if problem.n() <= FULL_JACOBIAN_MAX_N {
        match penalty_jacobian(&problem, &sol, &ctx, ParamBlock::Q) {
            Ok(j) => {
                let _ = writeln!(out, "jacobian dz/dq =");
                fmt_matrix(&mut out, &j);
                if projection.is_some() {
                    let mut jx = j.clone();
                    jx.scale(-2.0);
                    let _ = writeln!(out, "jacobian dz/dx =");
                    fmt_matrix(&mut out, &jx);
                }
                if let Some(k) = &kkt {
                    let _ = writeln!(out, "eps_rel vs KKT-reduced = {:.3e}", discrepancy(j.as_slice(), k.dz.as_slice()));
                }
            }
            Err(e) => {
                let _ = writeln!(out, "jacobian failed: {e}");
                code = EXIT_FAILURE;
            }
        }
    }
    if let Some(r) = &r {
        match vjp(&ctx.hessian, &problem, &sol, &ctx.active, &ctx.config, r) {
            Ok(res) => {
                let g = res.vjp_gradient.expect("vjp result");
                let _ = writeln!(out, "vjp for r = {}", fmt_vec(r));
                let _ = writeln!(out, "dq = {}", fmt_vec(&g.dq));
                if projection.is_some() {
                    let dx: Vec<f64> = g.dq.iter().map(|v| -2.0 * v).collect();
                    let _ = writeln!(out, "dx = {}", fmt_vec(&dx));
                }
                if !g.db.is_empty() {
                    let _ = writeln!(out, "db = {}", fmt_vec(&g.db));
                }
                if !g.dd.is_empty() {
                    let _ = writeln!(out, "dd = {}", fmt_vec(&g.dd));
                }
                fmt_block(&mut out, "dP", &g.dp);
                fmt_block(&mut out, "dA", &g.da);
                fmt_block(&mut out, "dC", &g.dc);
            }
            Err(e) => {
                let _ = writeln!(out, "vjp failed: {e}");
                code = EXIT_FAILURE;
            }
        }
    }
    Ok((out, code))
}

pub fn cmd_single(cfg: &RunConfig, problem_path: &Path, r_path: Option<&Path>) -> Result<i32, CommandError> {
    let (text, code) = run_single(cfg, problem_path, r_path)?;
    print!("{text}");
    Ok(code)
}
