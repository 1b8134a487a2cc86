use dxpp_core::benchgen::{
    gen_chain_projection, gen_portfolio_qp, gen_random_qp, gen_simplex_projection, simplex_from_input,
};
use dxpp_core::linalg::{DenseMatrix, Matrix};
use dxpp_core::problem::{build_problem, StorageMode};
use dxpp_core::solver::{solve, SolverSettings, Status};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn unconstrained_minimizer() {
    let p = Matrix::Dense(DenseMatrix::from_diagonal(&[2.0, 2.0]));
    let empty = Matrix::Dense(DenseMatrix::zeros(0, 2));
    let prob = build_problem(p, vec![-2.0, -4.0], empty.clone(), vec![], empty, vec![], StorageMode::Dense).unwrap();
    let sol = solve(&prob, &SolverSettings::default(), "builtin-ipm").unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(max_diff(&sol.z, &[1.0, 2.0]) < 1e-12);
    assert!(sol.nu.is_empty() && sol.mu.is_empty());
}

#[test]
fn simplex_examples() {
    for (x, want) in [([0.6, 0.2], [0.7, 0.3]), ([2.0, -1.0], [1.0, 0.0])] {
        let inst = simplex_from_input(x.to_vec(), 0);
        let sol = solve(&inst.problem, &SolverSettings::default(), "builtin-ipm").unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(max_diff(&sol.z, &want) < 1e-6, "{:?}", sol.z);
        assert!(sol.mu.iter().all(|&m| m >= -1e-6));
    }
}

#[test]
fn unknown_solver_is_rejected() {
    let inst = simplex_from_input(vec![0.1], 0);
    assert!(solve(&inst.problem, &SolverSettings::default(), "nope").is_err());
}

#[test]
fn random_qps_solve_to_optimal() {
    for (n, m) in [(10, 5), (50, 10), (100, 20)] {
        for seed in 0..5 {
            let inst = gen_random_qp(n, m, seed);
            let sol = solve(&inst.problem, &SolverSettings::default(), "builtin-ipm").unwrap();
            assert_eq!(sol.status, Status::Optimal, "{n}x{m} seed {seed}: {sol:?}");
            assert!(sol.max_residual() <= 1e-6);
            let tight = solve(&inst.problem, &SolverSettings::with_eps_abs(1e-10), "builtin-ipm").unwrap();
            assert_eq!(tight.status, Status::Optimal, "tight {n}x{m} seed {seed}: {:?}", tight.max_residual());
        }
    }
}

#[test]
fn projection_oracles_match_solver() {
    for n in [1, 5, 100, 1000] {
        let inst = gen_simplex_projection(n, 3);
        let sol = solve(&inst.problem, &SolverSettings::default(), "builtin-ipm").unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(max_diff(&sol.z, inst.ground_truth.as_ref().unwrap()) < 1e-5, "simplex n={n}");
    }
    for (points, dim) in [(2, 1), (100, 2), (100, 10)] {
        let inst = gen_chain_projection(points, dim, 4);
        let sol = solve(&inst.problem, &SolverSettings::default(), "builtin-ipm").unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(max_diff(&sol.z, inst.ground_truth.as_ref().unwrap()) < 1e-5, "chain {points}x{dim}");
    }
}

#[test]
fn portfolio_solves_and_loose_budget_has_zero_duals() {
    let (h, na) = (3, 5);
    let inst = gen_portfolio_qp(h, na, 1000.0, 2.0, 11);
    let sol = solve(&inst.problem, &SolverSettings::default(), "builtin-ipm").unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let m = inst.problem.num_ineq();
    for k in 0..h {
        assert!(sol.mu[m - h + k].abs() < 1e-6);
    }
}
