use dxpp_core::active_set::DEFAULT_EPS_ACTIVE;
use dxpp_core::backward::{dual_sensitivity, jvp, penalty_jacobian, prepare, vjp, assemble_rhs, solve_jacobian};
use dxpp_core::benchgen::{gen_random_qp, simplex_from_input};
use dxpp_core::kkt::{finite_difference_jacobian, kkt_jacobian_full, kkt_jacobian_reduced, relative_discrepancy};
use dxpp_core::linalg::{DenseMatrix, Matrix, SpdStrategy};
use dxpp_core::params::ParamBlock;
use dxpp_core::penalty::PenaltyConfig;
use dxpp_core::problem::{build_problem, DataGradient, QpProblem, StorageMode};
use dxpp_core::solver::{solve, QpSolution, SolverSettings};

fn solved(problem: &QpProblem, eps: f64) -> QpSolution {
    let sol = solve(problem, &SolverSettings::with_eps_abs(eps), "builtin-ipm").unwrap();
    assert!(sol.is_optimal(), "{:?}", sol.status);
    sol
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Relative discrepancy, or the absolute one when the reference vanishes.
fn discrepancy(a: &[f64], b: &[f64]) -> f64 {
    relative_discrepancy(a, b).unwrap_or_else(|_| a.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn unconstrained() -> QpProblem {
    let p = Matrix::Dense(DenseMatrix::from_diagonal(&[2.0, 2.0]));
    let e = Matrix::Dense(DenseMatrix::zeros(0, 2));
    build_problem(p, vec![-2.0, -4.0], e.clone(), vec![], e, vec![], StorageMode::Dense).unwrap()
}

#[test]
fn unconstrained_sensitivities() {
    let prob = unconstrained();
    let sol = solved(&prob, 1e-6);
    let ctx = prepare(&prob, &sol, DEFAULT_EPS_ACTIVE, &PenaltyConfig::default(), &SpdStrategy::default()).unwrap();
    assert_eq!(ctx.hessian.h.to_dense(), DenseMatrix::from_diagonal(&[2.0, 2.0]));
    let j = penalty_jacobian(&prob, &sol, &ctx, ParamBlock::Q).unwrap();
    assert!(close(j.as_slice(), &[-0.5, 0.0, 0.0, -0.5], 1e-15));
    let v = vjp(&ctx.hessian, &prob, &sol, &ctx.active, &ctx.config, &[1.0, 0.0]).unwrap();
    assert!(close(&v.vjp_gradient.unwrap().dq, &[-0.5, 0.0], 1e-15));
    let zero = vjp(&ctx.hessian, &prob, &sol, &ctx.active, &ctx.config, &[0.0, 0.0]).unwrap();
    assert!(zero.vjp_gradient.unwrap().flatten().iter().all(|v| *v == 0.0));
    let mut dir = DataGradient::zeros_like(&prob);
    dir.dq[0] = 1.0;
    let t = jvp(&ctx.hessian, &prob, &sol, &ctx.active, &ctx.config, &dir).unwrap();
    assert!(close(&t.jvp_direction_result.unwrap(), &[-0.5, 0.0], 1e-15));
    let rhs = assemble_rhs(&prob, &sol, &ctx.active, &ctx.config, ParamBlock::Q).unwrap();
    let z = solve_jacobian(&ctx.hessian, &rhs).unwrap();
    assert_eq!(dual_sensitivity(&ctx.hessian, &rhs, z.jacobian().unwrap()).rows(), 0);
    let k = kkt_jacobian_reduced(&prob, &sol, &ctx.active, ParamBlock::Q).unwrap();
    assert!(relative_discrepancy(k.dz.as_slice(), j.as_slice()).unwrap() < 1e-14);
    let f = kkt_jacobian_full(&prob, &sol, ParamBlock::Q).unwrap();
    assert!(relative_discrepancy(f.dz.as_slice(), j.as_slice()).unwrap() < 1e-14);
    let fd = finite_difference_jacobian(&prob, ParamBlock::Q, 1e-6, &SolverSettings::with_eps_abs(1e-10), "builtin-ipm").unwrap();
    assert!(relative_discrepancy(fd.as_slice(), j.as_slice()).unwrap() < 1e-8);
}

#[test]
fn single_equality_hessian() {
    let p = Matrix::Dense(DenseMatrix::identity(2));
    let a = Matrix::Dense(DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap());
    let c = Matrix::Dense(DenseMatrix::zeros(0, 2));
    let prob = build_problem(p, vec![0.0, 0.0], a, vec![1.0], c, vec![], StorageMode::Dense).unwrap();
    let sol = solved(&prob, 1e-6);
    let active = dxpp_core::active_set::classify_active_set(&prob, &sol, 1e-5);
    let config = PenaltyConfig { rho: 2.0, delta: 0.5, ..Default::default() };
    let h = dxpp_core::backward::assemble_hessian(&prob, &active, &config).unwrap();
    let want = DenseMatrix::from_rows(&[vec![3.0, 2.0], vec![2.0, 3.0]]).unwrap();
    assert_eq!(h.h.to_dense(), want);
}

fn simplex_jacobian_x(x: [f64; 2]) -> DenseMatrix {
    let inst = simplex_from_input(x.to_vec(), 0);
    let sol = solved(&inst.problem, 1e-6);
    let ctx = prepare(&inst.problem, &sol, DEFAULT_EPS_ACTIVE, &PenaltyConfig::default(), &SpdStrategy::default()).unwrap();
    let mut j = penalty_jacobian(&inst.problem, &sol, &ctx, ParamBlock::Q).unwrap();
    j.scale(-2.0);
    j
}

#[test]
fn simplex_jacobians() {
    let j = simplex_jacobian_x([0.6, 0.2]);
    let want = [0.5, -0.5, -0.5, 0.5];
    for (a, b) in j.as_slice().iter().zip(want) {
        assert!((a - b).abs() < 1e-4, "{j:?}");
    }
    let j = simplex_jacobian_x([2.0, -1.0]);
    assert!(j.as_slice().iter().all(|v| v.abs() < 1e-4), "{j:?}");
}

#[test]
fn random_qp_oracles_agree() {
    for seed in 0..3 {
        let inst = gen_random_qp(10, 5, seed);
        let prob = &inst.problem;
        let sol = solved(prob, 1e-6);
        let ctx = prepare(prob, &sol, DEFAULT_EPS_ACTIVE, &PenaltyConfig::default(), &SpdStrategy::default()).unwrap();
        for block in ParamBlock::ALL {
            let pen = penalty_jacobian(prob, &sol, &ctx, block).unwrap();
            let red = kkt_jacobian_reduced(prob, &sol, &ctx.active, block).unwrap();
            let fd = finite_difference_jacobian(prob, block, 1e-6, &SolverSettings::with_eps_abs(1e-10), "builtin-ipm").unwrap();
            let e1 = discrepancy(pen.as_slice(), red.dz.as_slice());
            let e2 = discrepancy(fd.as_slice(), red.dz.as_slice());
            assert!(e1 < 1e-4 && e2 < 1e-4, "seed {seed} {block:?}: pen {e1:e} fd {e2:e}");
            if let Ok(full) = kkt_jacobian_full(prob, &sol, block) {
                let e3 = discrepancy(full.dz.as_slice(), red.dz.as_slice());
                assert!(e3 < 1e-8, "full {e3:e}");
            }
        }
    }
}
