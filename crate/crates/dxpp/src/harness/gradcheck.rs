//! Penalty Jacobian vs KKT-reduced oracle on seeded random QPs.

use std::time::Instant;

use dxpp_core::benchgen::{gen_random_qp, Family};
use dxpp_core::linalg::{CsrMatrix, DenseMatrix, Matrix};
use dxpp_core::problem::{build_problem, QpProblem};
use rayon::prelude::*;
use serde::Serialize;

use super::{discrepancy, kkt_gradient, millis, penalty_gradient, solve_timed, CommandError, EXIT_FAILURE, EXIT_OK};
use crate::config::{parse_pair, RunConfig};
use crate::output::{mean, std_dev, write_csv, Manifest};

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct GradcheckRow {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub eps_rel: Option<f64>,
    pub forward_ms: f64,
    pub backward_ms: f64,
    pub kkt_ms: f64,
    pub num_active: usize,
    pub margin: f64,
    pub status: String,
    pub error: String,
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct GradcheckSummary {
    pub n: usize,
    pub m: usize,
    pub instances: usize,
    pub failed: usize,
    pub mean_eps_rel: f64,
    pub std_eps_rel: f64,
    pub max_eps_rel: f64,
    pub mean_forward_ms: f64,
    pub mean_backward_ms: f64,
    pub mean_kkt_ms: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub rows: Vec<GradcheckRow>,
    pub summaries: Vec<GradcheckSummary>,
    pub exit_code: i32,
}

/// Default acceptance threshold on mean ε_rel for an `n`-variable size.
pub fn default_threshold(n: usize) -> f64 {
    if n <= 100 {
        1e-5
    } else {
        1e-3
    }
}

/// Appends the contradictory pair `z₀ ≤ −1`, `−z₀ ≤ −1`.
pub fn make_infeasible(problem: &QpProblem) -> QpProblem {
    let n = problem.n();
    let extra = DenseMatrix::from_fn(2, n, |r, c| match (r, c) {
        (0, 0) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    });
    let extra = if problem.c().is_sparse() { Matrix::Sparse(CsrMatrix::from_dense(&extra)) } else { Matrix::Dense(extra) };
    let mut d = problem.d().to_vec();
    d.extend([-1.0, -1.0]);
    build_problem(
        problem.p().clone(),
        problem.q().to_vec(),
        problem.a().clone(),
        problem.b().to_vec(),
        problem.c().vstack(&extra),
        d,
        problem.storage_mode(),
    )
    .expect("shapes agree")
}

fn failed_row(n: usize, m: usize, seed: u64, forward_ms: f64, status: &str, error: String) -> GradcheckRow {
    GradcheckRow {
        n,
        m,
        seed,
        eps_rel: None,
        forward_ms,
        backward_ms: 0.0,
        kkt_ms: 0.0,
        num_active: 0,
        margin: f64::NAN,
        status: status.to_string(),
        error,
    }
}

/// One instance: forward solve, penalty gradient, KKT-reduced oracle.
pub fn gradcheck_instance(cfg: &RunConfig, n: usize, m: usize, seed: u64) -> GradcheckRow {
    let mut problem = gen_random_qp(n, m, seed).problem;
    if cfg.inject_infeasible.contains(&seed) {
        problem = make_infeasible(&problem);
    }
    let t = Instant::now();
    let (sol, forward_ms) = match solve_timed(&problem, cfg) {
        Ok(s) => s,
        Err(e) => return failed_row(n, m, seed, millis(t), "error", e.to_string()),
    };
    if !sol.is_optimal() {
        let msg = format!("forward solve ended with status {} (residual {:e})", sol.status.as_str(), sol.max_residual());
        return failed_row(n, m, seed, forward_ms, sol.status.as_str(), msg);
    }
    let penalty = match cfg.penalty() {
        Ok(p) => p,
        Err(e) => return failed_row(n, m, seed, forward_ms, "error", e.to_string()),
    };
    let r = super::cotangent(&problem, seed);
    let (g_pen, ctx, backward_ms) = match penalty_gradient(&problem, &sol, cfg, &penalty, cfg.mode, &r) {
        Ok(v) => v,
        Err(e) => return failed_row(n, m, seed, forward_ms, "backward_failed", e.to_string()),
    };
    let (g_kkt, _, _, kkt_ms) = match kkt_gradient(&problem, &sol, cfg, cfg.mode, &r) {
        Ok(v) => v,
        Err(e) => return failed_row(n, m, seed, forward_ms, "oracle_failed", e.to_string()),
    };
    GradcheckRow {
        n,
        m,
        seed,
        eps_rel: Some(discrepancy(&g_pen, &g_kkt)),
        forward_ms,
        backward_ms,
        kkt_ms,
        num_active: ctx.active.num_active(),
        margin: ctx.active.margin,
        status: "ok".into(),
        error: String::new(),
    }
}

pub fn parse_sizes(cfg: &RunConfig) -> Result<Vec<(usize, usize)>, CommandError> {
    if cfg.family != Family::RandomQp.as_str() {
        return Err(CommandError::Usage(format!("gradcheck needs family random_qp, got '{}'", cfg.family)));
    }
    cfg.sizes
        .iter()
        .map(|s| match parse_pair(s) {
            Some((n, m)) if n > 0 => Ok((n, m)),
            _ => Err(CommandError::Usage(format!("invalid size '{s}', expected NxM"))),
        })
        .collect()
}

/// Runs every (size, seed) pair, in parallel across instances.
pub fn run_gradcheck(cfg: &RunConfig) -> Result<GradcheckReport, CommandError> {
    cfg.validate().map_err(CommandError::Usage)?;
    let sizes = parse_sizes(cfg)?;
    let jobs: Vec<(usize, usize, u64)> = sizes.iter().flat_map(|&(n, m)| cfg.seeds.iter().map(move |&s| (n, m, s))).collect();
    let rows: Vec<GradcheckRow> = jobs.par_iter().map(|&(n, m, s)| gradcheck_instance(cfg, n, m, s)).collect();
    let summaries = summarize(cfg, &sizes, &rows);
    let ok = rows.iter().all(|r| r.status == "ok") && summaries.iter().all(|s| s.pass);
    Ok(GradcheckReport { rows, summaries, exit_code: if ok { EXIT_OK } else { EXIT_FAILURE } })
}

pub fn summarize(cfg: &RunConfig, sizes: &[(usize, usize)], rows: &[GradcheckRow]) -> Vec<GradcheckSummary> {
    sizes
        .iter()
        .map(|&(n, m)| {
            let mine: Vec<&GradcheckRow> = rows.iter().filter(|r| r.n == n && r.m == m).collect();
            let good: Vec<&GradcheckRow> = mine.iter().copied().filter(|r| r.eps_rel.is_some()).collect();
            let eps: Vec<f64> = good.iter().filter_map(|r| r.eps_rel).collect();
            let col = |f: fn(&GradcheckRow) -> f64| mean(&good.iter().map(|r| f(r)).collect::<Vec<_>>());
            let threshold = cfg.max_eps_rel.unwrap_or_else(|| default_threshold(n));
            let mean_eps = mean(&eps);
            GradcheckSummary {
                n,
                m,
                instances: mine.len(),
                failed: mine.len() - good.len(),
                mean_eps_rel: mean_eps,
                std_eps_rel: std_dev(&eps),
                max_eps_rel: eps.iter().copied().fold(f64::NAN, f64::max),
                mean_forward_ms: col(|r| r.forward_ms),
                mean_backward_ms: col(|r| r.backward_ms),
                mean_kkt_ms: col(|r| r.kkt_ms),
                threshold,
                pass: mean_eps <= threshold,
            }
        })
        .collect()
}

/// CLI entry: runs, writes `gradcheck.csv`, `gradcheck_summary.csv` and the
/// manifest, prints the summary.
pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<i32, CommandError> {
    let report = run_gradcheck(cfg)?;
    let rows_path = cfg.out.join("gradcheck.csv");
    let summary_path = cfg.out.join("gradcheck_summary.csv");
    write_csv(&rows_path, &report.rows)?;
    write_csv(&summary_path, &report.summaries)?;
    Manifest::new("gradcheck", cfg, vec![rows_path.clone(), summary_path]).write(&cfg.out.join("gradcheck.manifest.json"))?;
    for r in report.rows.iter().filter(|r| r.status != "ok") {
        eprintln!("{}x{} seed {}: {}: {}", r.n, r.m, r.seed, r.status, r.error);
    }
    println!("{:>6} {:>5} {:>5} {:>7} {:>12} {:>12} {:>12} {:>12}  result", "n", "m", "runs", "failed", "mean_eps", "std_eps", "fwd_ms", "bwd_ms");
    for s in &report.summaries {
        println!(
            "{:>6} {:>5} {:>5} {:>7} {:>12.3e} {:>12.3e} {:>12.3} {:>12.3}  {}",
            s.n,
            s.m,
            s.instances,
            s.failed,
            s.mean_eps_rel,
            s.std_eps_rel,
            s.mean_forward_ms,
            s.mean_backward_ms,
            if s.pass { "ok" } else { "FAIL" }
        );
    }
    println!("rows written to {}", rows_path.display());
    Ok(report.exit_code)
}
