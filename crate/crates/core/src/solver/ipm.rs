//! Primal-dual interior-point method with Mehrotra predictor-corrector steps.
//!
//! Works with slacks `s = d − Cz ≥ 0` and an infeasible start. Iterates until
//! the KKT residuals of `(z, ν, μ)` (see [`kkt_residuals`]) are all below
//! `eps_abs`, optionally finishing with an active-set polish.

use alloc::vec;
use alloc::vec::Vec;

use super::backend::NewtonSystem;
use super::polish::polish;
use super::{kkt_residuals, QpSolution, QpSolver, Residuals, SolverSettings, Status, BUILTIN_SOLVER};
use crate::linalg::{dot, norm_inf};
use crate::problem::QpProblem;

const STEP_FRACTION: f64 = 0.99;
/// Multipliers beyond this (relative to the data scale) signal infeasibility.
const DIVERGENCE: f64 = 1e12;

#[derive(Clone, Debug, Default)]
pub struct InteriorPoint {
    _private: (),
}

impl InteriorPoint {
    pub fn new() -> Self {
        InteriorPoint::default()
    }
}

impl QpSolver for InteriorPoint {
    fn name(&self) -> &str {
        BUILTIN_SOLVER
    }

    fn solve(&mut self, problem: &QpProblem, settings: &SolverSettings) -> QpSolution {
        solve_ipm(problem, settings)
    }
}

fn finish(z: Vec<f64>, nu: Vec<f64>, mu: Vec<f64>, status: Status, res: Residuals, iterations: usize, polished: bool) -> QpSolution {
    QpSolution {
        z,
        nu,
        mu,
        status,
        primal_residual: res.primal,
        dual_residual: res.dual,
        complementarity_residual: res.complementarity,
        iterations,
        polished,
    }
}

/// Farkas test on the normalized multipliers: `Aᵀν + Cᵀμ ≈ 0`, `μ ≥ 0` and
/// `bᵀν + dᵀμ < 0` prove that no feasible point exists.
fn certifies_infeasibility(problem: &QpProblem, nu: &[f64], mu: &[f64]) -> bool {
    let scale = norm_inf(nu).max(norm_inf(mu));
    if !(scale > 0.0) || !scale.is_finite() {
        return false;
    }
    let nu: Vec<f64> = nu.iter().map(|v| v / scale).collect();
    let mu: Vec<f64> = mu.iter().map(|v| (v / scale).max(0.0)).collect();
    let mut r = problem.a().tr_mul_vec(&nu);
    problem.c().tr_mul_vec_acc(&mu, &mut r);
    let gap = dot(problem.b(), &nu) + dot(problem.d(), &mu);
    let tol = 1e-6 * (1.0 + problem.a().max_abs() + problem.c().max_abs());
    norm_inf(&r) <= tol && gap < -tol
}

fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    let mut a = 1.0f64;
    for (xi, di) in x.iter().zip(dx) {
        if *di < 0.0 {
            a = a.min(-xi / di);
        }
    }
    a
}

pub fn solve_ipm(problem: &QpProblem, settings: &SolverSettings) -> QpSolution {
    let n = problem.n();
    let p = problem.num_eq();
    let m = problem.num_ineq();
    let fail = |iterations| {
        let res = Residuals { primal: f64::INFINITY, dual: f64::INFINITY, complementarity: f64::INFINITY };
        finish(vec![0.0; n], vec![0.0; p], vec![0.0; m], Status::NumericalFailure, res, iterations, false)
    };
    let mut sys = match NewtonSystem::new(problem, settings.regularization_floor) {
        Ok(s) => s,
        Err(_) => return fail(0),
    };
    if sys.factor(&vec![1.0; m]).is_err() {
        return fail(0);
    }

    // Initial point from [P Aᵀ Cᵀ; A 0 0; C 0 −I] x = [−q; b; d].
    let neg_q: Vec<f64> = problem.q().iter().map(|v| -v).collect();
    let (mut z, mut nu, _) = sys.solve(&neg_q, problem.b(), problem.d());
    if m == 0 {
        let res = kkt_residuals(problem, &z, &nu, &[]);
        let status = if res.max() <= settings.eps_abs { Status::Optimal } else { Status::NumericalFailure };
        if !z.iter().all(|v| v.is_finite()) {
            return fail(1);
        }
        return finish(z, nu, Vec::new(), status, res, 1, false);
    }
    let cz = problem.c().mul_vec(&z);
    let mut s: Vec<f64> = problem.d().iter().zip(&cz).map(|(d, c)| d - c).collect();
    let mut mu: Vec<f64> = s.iter().map(|v| -v).collect();
    let shift = |v: &mut Vec<f64>| {
        let lo = v.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        if lo <= 0.0 {
            let add = 1.0 - lo;
            v.iter_mut().for_each(|x| *x += add);
        }
    };
    shift(&mut s);
    shift(&mut mu);

    let data_scale = 1.0
        + norm_inf(problem.q())
        + norm_inf(problem.b())
        + norm_inf(problem.d())
        + problem.p().max_abs();
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    let mut best_primal = f64::INFINITY;
    let mut stalled = 0usize;
    for it in 0..settings.max_iterations {
        iterations = it;
        let res = kkt_residuals(problem, &z, &nu, &mu);
        if res.max() <= settings.eps_abs {
            status = Status::Optimal;
            break;
        }
        if !res.max().is_finite() {
            status = Status::NumericalFailure;
            break;
        }
        if res.primal < 0.5 * best_primal {
            best_primal = res.primal;
            stalled = 0;
        } else {
            stalled += 1;
        }
        let dual_size = norm_inf(&mu).max(norm_inf(&nu));
        if res.primal > settings.eps_abs && dual_size > DIVERGENCE * data_scale && stalled > 10 {
            status = Status::Infeasible;
            break;
        }

        // residuals of the slack formulation
        let mut r_d = problem.stationarity(&z, &nu, &mu);
        let r_p = problem.equality_residual(&z);
        let cz = problem.c().mul_vec(&z);
        let r_i: Vec<f64> = (0..m).map(|i| cz[i] + s[i] - problem.d()[i]).collect();
        let gap = dot(&s, &mu) / m as f64;
        let dscale: Vec<f64> = (0..m).map(|i| mu[i] / s[i]).collect();
        if sys.factor(&dscale).is_err() {
            status = Status::NumericalFailure;
            break;
        }
        r_d.iter_mut().for_each(|v| *v = -*v);
        let neg_rp: Vec<f64> = r_p.iter().map(|v| -v).collect();

        // predictor: r_c = s∘μ, so r₃ = −r_i + s
        let r3: Vec<f64> = (0..m).map(|i| -r_i[i] + s[i]).collect();
        let (dz_aff, _, dmu_aff) = sys.solve(&r_d, &neg_rp, &r3);
        let cdz = problem.c().mul_vec(&dz_aff);
        let ds_aff: Vec<f64> = (0..m).map(|i| -r_i[i] - cdz[i]).collect();
        let a_aff = max_step(&s, &ds_aff).min(max_step(&mu, &dmu_aff));
        let mu_aff: f64 =
            (0..m).map(|i| (s[i] + a_aff * ds_aff[i]) * (mu[i] + a_aff * dmu_aff[i])).sum::<f64>() / m as f64;
        let sigma = libm::pow((mu_aff / gap).clamp(0.0, 1.0), 3.0);

        // corrector
        let r3: Vec<f64> = (0..m)
            .map(|i| {
                let rc = s[i] * mu[i] + ds_aff[i] * dmu_aff[i] - sigma * gap;
                -r_i[i] + rc / mu[i]
            })
            .collect();
        let (dz, dnu, dmu) = sys.solve(&r_d, &neg_rp, &r3);
        let cdz = problem.c().mul_vec(&dz);
        let ds: Vec<f64> = (0..m).map(|i| -r_i[i] - cdz[i]).collect();
        let alpha = (STEP_FRACTION * max_step(&s, &ds).min(max_step(&mu, &dmu))).min(1.0);
        if !(alpha > 1e-14) || !dz.iter().all(|v| v.is_finite()) {
            status = Status::NumericalFailure;
            break;
        }
        for i in 0..n {
            z[i] += alpha * dz[i];
        }
        for i in 0..p {
            nu[i] += alpha * dnu[i];
        }
        for i in 0..m {
            s[i] = (s[i] + alpha * ds[i]).max(f64::MIN_POSITIVE);
            mu[i] = (mu[i] + alpha * dmu[i]).max(f64::MIN_POSITIVE);
        }
        iterations = it + 1;
    }
    let mut res = kkt_residuals(problem, &z, &nu, &mu);
    if status == Status::MaxIter && res.max() <= settings.eps_abs {
        status = Status::Optimal;
    }
    if matches!(status, Status::MaxIter | Status::NumericalFailure) && res.primal > settings.eps_abs && certifies_infeasibility(problem, &nu, &mu) {
        status = Status::Infeasible;
    }
    let mut polished = false;
    if settings.polish && matches!(status, Status::Optimal | Status::MaxIter) && res.max() <= 1e3 * settings.eps_abs {
        if let Some(pol) = polish(problem, &z, &mu, settings.eps_abs, settings.regularization_floor) {
            let pres = kkt_residuals(problem, &pol.z, &pol.nu, &pol.mu);
            if pres.max() <= res.max() || pres.max() <= 0.1 * settings.eps_abs {
                z = pol.z;
                nu = pol.nu;
                mu = pol.mu;
                res = pres;
                polished = true;
                if res.max() <= settings.eps_abs {
                    status = Status::Optimal;
                }
            }
        }
    }
    finish(z, nu, mu, status, res, iterations, polished)
}
