//! Serial wall-clock benchmark on the projection families.

use std::time::Instant;

use dxpp_core::benchgen::Family;
use serde::Serialize;

use super::{cotangent, discrepancy, kkt_gradient, make_instance, parse_family, penalty_gradient, solve_timed, CommandError, EXIT_FAILURE, EXIT_OK};
use crate::config::{GradMode, RunConfig};
use crate::output::{mean, median, write_csv, Manifest};

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub family: String,
    pub size: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub forward_ms: Option<f64>,
    pub backward_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub kkt_backward_ms: Option<f64>,
    pub eps_rel: Option<f64>,
    pub status: String,
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct BenchSummary {
    pub family: String,
    pub size: String,
    pub n: usize,
    pub reps: usize,
    pub median_forward_ms: f64,
    pub mean_forward_ms: f64,
    pub median_backward_ms: f64,
    pub mean_backward_ms: f64,
    pub median_total_ms: f64,
    pub mean_total_ms: f64,
    pub median_kkt_backward_ms: f64,
    pub mean_kkt_backward_ms: f64,
    pub timed_out: bool,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<BenchSummary>,
    pub exit_code: i32,
}

fn row(family: Family, size: &str, n: usize, rep: usize, seed: u64, status: &str) -> BenchRow {
    BenchRow {
        family: family.as_str().into(),
        size: size.into(),
        n,
        rep,
        seed,
        forward_ms: None,
        backward_ms: None,
        total_ms: None,
        kkt_backward_ms: None,
        eps_rel: None,
        status: status.into(),
    }
}

/// Times one repetition: forward solve, penalty VJP and KKT-reduced VJP for
/// the same seeded cotangent.
pub fn bench_rep(cfg: &RunConfig, family: Family, size: &str, rep: usize, seed: u64) -> Result<BenchRow, CommandError> {
    let inst = make_instance(family, size, seed, cfg).map_err(CommandError::Usage)?;
    let problem = &inst.problem;
    let n = problem.n();
    let penalty = cfg.penalty().map_err(|e| CommandError::Usage(e.to_string()))?;
    let (sol, forward_ms) = match solve_timed(problem, cfg) {
        Ok(v) => v,
        Err(_) => return Ok(row(family, size, n, rep, seed, "solve_error")),
    };
    if !sol.is_optimal() {
        return Ok(row(family, size, n, rep, seed, sol.status.as_str()));
    }
    let r = cotangent(problem, seed);
    let mut out = row(family, size, n, rep, seed, "ok");
    out.forward_ms = Some(forward_ms);
    match penalty_gradient(problem, &sol, cfg, &penalty, GradMode::All, &r) {
        Ok((g_pen, _, backward_ms)) => {
            out.backward_ms = Some(backward_ms);
            out.total_ms = Some(forward_ms + backward_ms);
            if let Ok((g_kkt, _, _, kkt_ms)) = kkt_gradient(problem, &sol, cfg, GradMode::All, &r) {
                out.kkt_backward_ms = Some(kkt_ms);
                out.eps_rel = Some(discrepancy(&g_pen, &g_kkt));
            }
        }
        Err(_) => out.status = "backward_failed".into(),
    }
    Ok(out)
}

fn summarize(family: Family, size: &str, rows: &[BenchRow]) -> BenchSummary {
    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let col = |f: fn(&BenchRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let (fwd, bwd, tot, kkt) = (col(|r| r.forward_ms), col(|r| r.backward_ms), col(|r| r.total_ms), col(|r| r.kkt_backward_ms));
    BenchSummary {
        family: family.as_str().into(),
        size: size.into(),
        n: rows.first().map(|r| r.n).unwrap_or(0),
        reps: ok.len(),
        median_forward_ms: median(&fwd),
        mean_forward_ms: mean(&fwd),
        median_backward_ms: median(&bwd),
        mean_backward_ms: mean(&bwd),
        median_total_ms: median(&tot),
        mean_total_ms: mean(&tot),
        median_kkt_backward_ms: median(&kkt),
        mean_kkt_backward_ms: mean(&kkt),
        timed_out: rows.iter().any(|r| r.status == "timeout"),
    }
}

/// Strictly serial. A size whose cumulative time passes the timeout gets a
/// `timeout` row and the run moves on to the next size.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchReport, CommandError> {
    cfg.validate().map_err(CommandError::Usage)?;
    let family = parse_family(&cfg.family)?;
    if !matches!(family, Family::Simplex | Family::Chain) {
        return Err(CommandError::Usage(format!("bench supports simplex and chain, got '{}'", cfg.family)));
    }
    for size in &cfg.sizes {
        make_instance(family, size, 0, cfg).map_err(CommandError::Usage)?;
    }
    let base = cfg.seeds[0];
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut failed = false;
    for size in &cfg.sizes {
        let start = Instant::now();
        let mut mine = Vec::new();
        for rep in 0..cfg.repetitions {
            let seed = base + rep as u64;
            if start.elapsed().as_secs_f64() > cfg.timeout_secs {
                let n = mine.first().map(|r: &BenchRow| r.n).unwrap_or(0);
                mine.push(row(family, size, n, rep, seed, "timeout"));
                break;
            }
            let r = bench_rep(cfg, family, size, rep, seed)?;
            failed |= r.status != "ok";
            mine.push(r);
        }
        summaries.push(summarize(family, size, &mine));
        rows.extend(mine);
    }
    Ok(BenchReport { rows, summaries, exit_code: if failed { EXIT_FAILURE } else { EXIT_OK } })
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<i32, CommandError> {
    let report = run_bench(cfg)?;
    let rows_path = cfg.out.join("bench.csv");
    let summary_path = cfg.out.join("bench_summary.csv");
    write_csv(&rows_path, &report.rows)?;
    write_csv(&summary_path, &report.summaries)?;
    Manifest::new("bench", cfg, vec![rows_path.clone(), summary_path]).write(&cfg.out.join("bench.manifest.json"))?;
    println!("{:>8} {:>10} {:>8} {:>5} {:>14} {:>14} {:>14} {:>14}", "family", "size", "n", "reps", "med_fwd_ms", "med_bwd_ms", "med_total_ms", "med_kkt_ms");
    for s in &report.summaries {
        println!(
            "{:>8} {:>10} {:>8} {:>5} {:>14.3} {:>14.3} {:>14.3} {:>14.3}{}",
            s.family,
            s.size,
            s.n,
            s.reps,
            s.median_forward_ms,
            s.median_backward_ms,
            s.median_total_ms,
            s.median_kkt_backward_ms,
            if s.timed_out { "  (timeout)" } else { "" }
        );
    }
    println!("rows written to {}", rows_path.display());
    Ok(report.exit_code)
}
