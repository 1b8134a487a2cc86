//! Seeded generators for the benchmark problem families.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; normals use
//! `rand_distr::StandardNormal` (ziggurat). Draw order is part of each
//! generator's definition, so (family, size, seed) regenerates bit-identical
//! data on every platform.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CsrMatrix, DenseMatrix, Matrix};
use crate::problem::{build_problem, QpProblem, StorageMode};

/// Ridge added to `P = P′P′ᵀ` in random instances.
pub const RANDOM_QP_RIDGE: f64 = 1e-6;
/// Ridge on the turnover auxiliaries of the portfolio problem.
pub const PORTFOLIO_U_RIDGE: f64 = 1e-8;
/// Idiosyncratic ridge of the synthetic factor covariance.
pub const PORTFOLIO_COV_RIDGE: f64 = 1e-6;
pub const PORTFOLIO_FACTORS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    RandomQp,
    Simplex,
    Chain,
    Portfolio,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::RandomQp => "random_qp",
            Family::Simplex => "simplex",
            Family::Chain => "chain",
            Family::Portfolio => "portfolio",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "random_qp" | "random" => Some(Family::RandomQp),
            "simplex" => Some(Family::Simplex),
            "chain" => Some(Family::Chain),
            "portfolio" => Some(Family::Portfolio),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SizeDescriptor {
    RandomQp { n: usize, m: usize },
    Simplex { n: usize },
    Chain { points: usize, dim: usize },
    Portfolio { horizon: usize, assets: usize, risk_aversion: f64, turnover: f64 },
}

impl SizeDescriptor {
    /// Short label: `10x5`, `1000`, `100x2`, `12x10`.
    pub fn label(&self) -> String {
        match *self {
            SizeDescriptor::RandomQp { n, m } => format!("{n}x{m}"),
            SizeDescriptor::Simplex { n } => format!("{n}"),
            SizeDescriptor::Chain { points, dim } => format!("{points}x{dim}"),
            SizeDescriptor::Portfolio { horizon, assets, .. } => format!("{horizon}x{assets}"),
        }
    }

    pub fn integers(&self) -> Vec<usize> {
        match *self {
            SizeDescriptor::RandomQp { n, m } => vec![n, m],
            SizeDescriptor::Simplex { n } => vec![n],
            SizeDescriptor::Chain { points, dim } => vec![points, dim],
            SizeDescriptor::Portfolio { horizon, assets, .. } => vec![horizon, assets],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchInstance {
    pub problem: QpProblem,
    pub family: Family,
    pub size: SizeDescriptor,
    pub seed: u64,
    /// Projection input `x` (simplex and chain families).
    pub input: Option<Vec<f64>>,
    /// Analytic optimum when the family has one.
    pub ground_truth: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

fn normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| StandardNormal.sample(rng)).collect()
}

fn empty_rows(n: usize, sparse: bool) -> Matrix {
    Matrix::zeros_like_mode(sparse, 0, n)
}

/// Random strictly convex QP with `m` equality and `m` inequality rows,
/// feasible at `z₀ = 1`. Draw order: `P′` (row-major), `q`, `A`, `C`.
pub fn gen_random_qp(n: usize, m: usize, seed: u64) -> BenchInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pp = DenseMatrix::from_row_major(n, n, normals(&mut rng, n * n)).expect("shape");
    let q = normals(&mut rng, n);
    let a = DenseMatrix::from_row_major(m, n, normals(&mut rng, m * n)).expect("shape");
    let c = DenseMatrix::from_row_major(m, n, normals(&mut rng, m * n)).expect("shape");
    let mut p = pp.matmul(&pp.transpose());
    for i in 0..n {
        p.add_to(i, i, RANDOM_QP_RIDGE);
    }
    let ones = vec![1.0; n];
    let b = a.mul_vec(&ones);
    let d: Vec<f64> = c.mul_vec(&ones).iter().map(|v| v + 1.0).collect();
    let problem = build_problem(Matrix::Dense(p), q, Matrix::Dense(a), b, Matrix::Dense(c), d, StorageMode::Dense)
        .expect("generated data is consistent");
    BenchInstance {
        problem,
        family: Family::RandomQp,
        size: SizeDescriptor::RandomQp { n, m },
        seed,
        input: None,
        ground_truth: None,
        notes: Vec::new(),
    }
}

/// Euclidean projection onto the probability simplex by sorted thresholding.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|xi| (xi - theta).max(0.0)).collect()
}

/// Projection problem `min ‖z − x‖²` over the simplex, written as a QP with
/// `P = 2I`, `q = −2x`, `C = [−I; I]`, `d = [0; 1]`, `A = 1ᵀ`, `b = 1`.
pub fn gen_simplex_projection(n: usize, seed: u64) -> BenchInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = normals(&mut rng, n);
    simplex_from_input(x, seed)
}

/// Simplex projection instance for a given `x`.
pub fn simplex_from_input(x: Vec<f64>, seed: u64) -> BenchInstance {
    let n = x.len();
    let p = CsrMatrix::from_diagonal(&vec![2.0; n]);
    let q: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
    let mut trip = Vec::with_capacity(2 * n);
    for i in 0..n {
        trip.push((i, i, -1.0));
        trip.push((n + i, i, 1.0));
    }
    let c = CsrMatrix::from_triplets(2 * n, n, &trip).expect("in bounds");
    let mut d = vec![0.0; n];
    d.extend(core::iter::repeat(1.0).take(n));
    let a_trip: Vec<_> = (0..n).map(|j| (0, j, 1.0)).collect();
    let a = CsrMatrix::from_triplets(1, n, &a_trip).expect("in bounds");
    let problem = build_problem(
        Matrix::Sparse(p),
        q,
        Matrix::Sparse(a),
        vec![1.0],
        Matrix::Sparse(c),
        d,
        StorageMode::SparseCsr,
    )
    .expect("generated data is consistent");
    let truth = project_simplex(&x);
    BenchInstance {
        problem,
        family: Family::Simplex,
        size: SizeDescriptor::Simplex { n },
        seed,
        input: Some(x),
        ground_truth: Some(truth),
        notes: vec![String::from("ground truth: sorted-threshold simplex projection")],
    }
}

/// Increasing piecewise-linear function: `slopes[s]·v + intercepts[s]` on
/// segment `s`, where segment `s` spans `[breaks[s-1], breaks[s]]`.
#[derive(Clone, Debug)]
struct PiecewiseLinear {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

impl PiecewiseLinear {
    fn zero(&self) -> f64 {
        let segs = self.slopes.len();
        for s in 0..segs {
            let (a, c) = (self.slopes[s], self.intercepts[s]);
            let hi = if s < self.breaks.len() { self.breaks[s] } else { f64::INFINITY };
            let at_hi = if hi.is_finite() { a * hi + c } else { f64::INFINITY };
            if at_hi >= 0.0 {
                return if a > 0.0 { -c / a } else { hi };
            }
        }
        f64::INFINITY
    }

    /// `v ↦ g(v+1)` left of `v*−1`, `0` on `[v*−1, v*+1]`, `g(v−1)` right of `v*+1`.
    fn spread(&self, vstar: f64) -> PiecewiseLinear {
        let mut out = PiecewiseLinear { breaks: Vec::new(), slopes: Vec::new(), intercepts: Vec::new() };
        let segs = self.slopes.len();
        let lo = |s: usize| if s == 0 { f64::NEG_INFINITY } else { self.breaks[s - 1] };
        for s in 0..segs {
            if lo(s) < vstar {
                out.slopes.push(self.slopes[s]);
                out.intercepts.push(self.intercepts[s] + self.slopes[s]);
                if s < self.breaks.len() && self.breaks[s] < vstar {
                    out.breaks.push(self.breaks[s] - 1.0);
                }
            }
        }
        out.breaks.push(vstar - 1.0);
        out.slopes.push(0.0);
        out.intercepts.push(0.0);
        out.breaks.push(vstar + 1.0);
        for s in 0..segs {
            let hi = if s < self.breaks.len() { self.breaks[s] } else { f64::INFINITY };
            if hi > vstar {
                out.slopes.push(self.slopes[s]);
                out.intercepts.push(self.intercepts[s] - self.slopes[s]);
                if s < self.breaks.len() {
                    out.breaks.push(self.breaks[s] + 1.0);
                }
            }
        }
        out
    }

    fn add_linear(&mut self, slope: f64, intercept: f64) {
        self.slopes.iter_mut().for_each(|a| *a += slope);
        self.intercepts.iter_mut().for_each(|c| *c += intercept);
    }
}

/// Exact solution of `min Σ (z_j − x_j)²` s.t. `|z_j − z_{j+1}| ≤ 1` by
/// dynamic programming on the derivative of the cost-to-go.
pub fn project_chain_1d(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    if m == 0 {
        return Vec::new();
    }
    let mut g = PiecewiseLinear { breaks: Vec::new(), slopes: vec![2.0], intercepts: vec![-2.0 * x[0]] };
    let mut argmins = Vec::with_capacity(m);
    for j in 0..m {
        let vstar = g.zero();
        argmins.push(vstar);
        if j + 1 < m {
            g = g.spread(vstar);
            g.add_linear(2.0, -2.0 * x[j + 1]);
        }
    }
    let mut z = vec![0.0; m];
    z[m - 1] = argmins[m - 1];
    for j in (0..m - 1).rev() {
        z[j] = argmins[j].clamp(z[j + 1] - 1.0, z[j + 1] + 1.0);
    }
    z
}

/// Chain projection with `ℓ∞`-bounded consecutive differences; variable
/// `(j, k)` has index `j·dim + k`.
pub fn gen_chain_projection(points: usize, dim: usize, seed: u64) -> BenchInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = normals(&mut rng, points * dim).into_iter().map(|v| 10.0 * v).collect();
    chain_from_input(x, points, dim, seed)
}

pub fn chain_from_input(x: Vec<f64>, points: usize, dim: usize, seed: u64) -> BenchInstance {
    let n = points * dim;
    let p = CsrMatrix::from_diagonal(&vec![2.0; n]);
    let q: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
    let mut trip = Vec::new();
    let mut row = 0;
    for j in 0..points.saturating_sub(1) {
        for k in 0..dim {
            let (a, b) = (j * dim + k, (j + 1) * dim + k);
            trip.push((row, a, 1.0));
            trip.push((row, b, -1.0));
            trip.push((row + 1, a, -1.0));
            trip.push((row + 1, b, 1.0));
            row += 2;
        }
    }
    let c = CsrMatrix::from_triplets(row, n, &trip).expect("in bounds");
    let problem = build_problem(
        Matrix::Sparse(p),
        q,
        empty_rows(n, true),
        Vec::new(),
        Matrix::Sparse(c),
        vec![1.0; row],
        StorageMode::SparseCsr,
    )
    .expect("generated data is consistent");
    let mut truth = vec![0.0; n];
    for k in 0..dim {
        let xs: Vec<f64> = (0..points).map(|j| x[j * dim + k]).collect();
        for (j, v) in project_chain_1d(&xs).into_iter().enumerate() {
            truth[j * dim + k] = v;
        }
    }
    BenchInstance {
        problem,
        family: Family::Chain,
        size: SizeDescriptor::Chain { points, dim },
        seed,
        input: Some(x),
        ground_truth: Some(truth),
        notes: vec![String::from("ground truth: per-dimension dynamic programming")],
    }
}

/// Multi-period mean-variance portfolio QP with turnover limits over the
/// augmented variable `(w_1..w_H, u_1..u_H)`. Per period: `1ᵀw_k = 1`,
/// `w_k ≥ 0`, `u_k ≥ 0`, `−u_k ≤ w_k − w_{k−1} ≤ u_k`, `1ᵀu_k ≤ τ`, with
/// `w_0 = 1/N`. Draw order per period: factor loadings (N×3), then forecasts.
pub fn gen_portfolio_qp(horizon: usize, assets: usize, risk_aversion: f64, turnover: f64, seed: u64) -> BenchInstance {
    let (h, na) = (horizon, assets);
    let nw = h * na;
    let n = 2 * nw;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DenseMatrix::zeros(n, n);
    let mut q = vec![0.0; n];
    for k in 0..h {
        let l = DenseMatrix::from_row_major(
            na,
            PORTFOLIO_FACTORS,
            normals(&mut rng, na * PORTFOLIO_FACTORS).into_iter().map(|v| 0.01 * v).collect(),
        )
        .expect("shape");
        let r: Vec<f64> = normals(&mut rng, na).into_iter().map(|v| 0.0005 + 0.01 * v).collect();
        let mut sigma = l.matmul(&l.transpose());
        for i in 0..na {
            sigma.add_to(i, i, PORTFOLIO_COV_RIDGE);
        }
        let off = k * na;
        for i in 0..na {
            for j in 0..na {
                p.set(off + i, off + j, risk_aversion * sigma.get(i, j));
            }
            q[off + i] = -r[i];
        }
    }
    for i in nw..n {
        p.set(i, i, PORTFOLIO_U_RIDGE);
    }
    let w = |k: usize, i: usize| k * na + i;
    let u = |k: usize, i: usize| nw + k * na + i;

    let mut a = DenseMatrix::zeros(h, n);
    for k in 0..h {
        for i in 0..na {
            a.set(k, w(k, i), 1.0);
        }
    }
    let b = vec![1.0; h];

    let m = 4 * nw + h;
    let mut c = DenseMatrix::zeros(m, n);
    let mut d = vec![0.0; m];
    let mut row = 0;
    for j in 0..nw {
        c.set(row, j, -1.0);
        row += 1;
    }
    for j in 0..nw {
        c.set(row, nw + j, -1.0);
        row += 1;
    }
    let w0 = 1.0 / na as f64;
    for k in 0..h {
        for i in 0..na {
            // w_k − w_{k−1} − u_k ≤ 0
            c.set(row, w(k, i), 1.0);
            c.set(row, u(k, i), -1.0);
            if k > 0 {
                c.set(row, w(k - 1, i), -1.0);
            } else {
                d[row] = w0;
            }
            row += 1;
            // −(w_k − w_{k−1}) − u_k ≤ 0
            c.set(row, w(k, i), -1.0);
            c.set(row, u(k, i), -1.0);
            if k > 0 {
                c.set(row, w(k - 1, i), 1.0);
            } else {
                d[row] = -w0;
            }
            row += 1;
        }
    }
    for k in 0..h {
        for i in 0..na {
            c.set(row, u(k, i), 1.0);
        }
        d[row] = turnover;
        row += 1;
    }
    debug_assert_eq!(row, m);
    let problem = build_problem(Matrix::Dense(p), q, Matrix::Dense(a), b, Matrix::Dense(c), d, StorageMode::Dense)
        .expect("generated data is consistent");
    BenchInstance {
        problem,
        family: Family::Portfolio,
        size: SizeDescriptor::Portfolio { horizon, assets, risk_aversion, turnover },
        seed,
        input: None,
        ground_truth: None,
        notes: vec![format!(
            "ridge {PORTFOLIO_U_RIDGE:e} added to the turnover block of P (otherwise only positive semidefinite)"
        )],
    }
}

/// Planted defect of [`gen_degenerate_qp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    /// Row 1 of `C` repeats active row 0, so the active rows are dependent.
    DuplicatedActiveRow,
    /// Row 0 has zero slack and zero multiplier.
    WeaklyActive,
}

impl Degeneracy {
    pub fn as_str(self) -> &'static str {
        match self {
            Degeneracy::DuplicatedActiveRow => "duplicated_active_row",
            Degeneracy::WeaklyActive => "weakly_active",
        }
    }
}

/// Strictly convex QP built backwards from a planted KKT point, with one
/// degenerate inequality. `p` equalities, `m ≥ 2` inequalities of which the
/// first `k = clamp(m/2, 2, n−p−1)` are active. `ground_truth` is `z*`.
/// Draw order: `P′`, `z*`, `A`, `ν*`, `C`, active multipliers, inactive slacks.
pub fn gen_degenerate_qp(n: usize, p: usize, m: usize, kind: Degeneracy, seed: u64) -> BenchInstance {
    assert!(m >= 2 && n >= p + 3, "degenerate instances need m >= 2 and n >= p + 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pp = DenseMatrix::from_row_major(n, n, normals(&mut rng, n * n)).expect("shape");
    let mut pm = pp.matmul(&pp.transpose());
    pm.scale(1.0 / n as f64);
    for i in 0..n {
        pm.add_to(i, i, 1.0);
    }
    let z = normals(&mut rng, n);
    let a = DenseMatrix::from_row_major(p, n, normals(&mut rng, p * n)).expect("shape");
    let nu = normals(&mut rng, p);
    let mut c = DenseMatrix::from_row_major(m, n, normals(&mut rng, m * n)).expect("shape");
    let k = (m / 2).clamp(2, n - p - 1).min(m);
    let mut mu: Vec<f64> = (0..m).map(|i| if i < k { 0.5 + rng.random::<f64>() } else { 0.0 }).collect();
    let slack: Vec<f64> = (0..m).map(|i| if i < k { 0.0 } else { -(0.5 + rng.random::<f64>()) }).collect();
    match kind {
        Degeneracy::DuplicatedActiveRow => {
            let row0 = c.row(0).to_vec();
            c.row_mut(1).copy_from_slice(&row0);
        }
        Degeneracy::WeaklyActive => mu[0] = 0.0,
    }
    // q = −(Pz* + Aᵀν* + Cᵀμ*), b = Az*, d = Cz* − slack
    let mut grad = pm.mul_vec(&z);
    a.tr_mul_vec_acc(&nu, &mut grad);
    c.tr_mul_vec_acc(&mu, &mut grad);
    let q: Vec<f64> = grad.iter().map(|v| -v).collect();
    let b = a.mul_vec(&z);
    let cz = c.mul_vec(&z);
    let d: Vec<f64> = (0..m).map(|i| cz[i] - slack[i]).collect();
    let problem = build_problem(Matrix::Dense(pm), q, Matrix::Dense(a), b, Matrix::Dense(c), d, StorageMode::Dense)
        .expect("generated data is consistent");
    BenchInstance {
        problem,
        family: Family::RandomQp,
        size: SizeDescriptor::RandomQp { n, m },
        seed,
        input: None,
        ground_truth: Some(z),
        notes: vec![format!("degenerate: {}, {k} active rows, {p} equalities", kind.as_str())],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_oracle_examples() {
        let z = project_simplex(&[0.6, 0.2]);
        assert!((z[0] - 0.7).abs() < 1e-15 && (z[1] - 0.3).abs() < 1e-15);
        assert_eq!(project_simplex(&[2.0, -1.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[-5.0]), vec![1.0]);
    }

    #[test]
    fn chain_oracle_examples() {
        let z = project_chain_1d(&[0.0, 10.0]);
        assert!((z[0] - 4.5).abs() < 1e-12 && (z[1] - 5.5).abs() < 1e-12);
        let feasible = [0.0, 0.5, 1.2, 0.9];
        let z = project_chain_1d(&feasible);
        for (a, b) in z.iter().zip(&feasible) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_rows_have_two_nonzeros() {
        let inst = gen_chain_projection(5, 3, 1);
        let c = inst.problem.c();
        assert_eq!(c.rows(), 2 * 4 * 3);
        assert!((0..c.rows()).all(|i| c.row_nnz(i) == 2));
    }

    #[test]
    fn portfolio_dimensions() {
        let inst = gen_portfolio_qp(3, 4, 5.0, 0.5, 9);
        assert_eq!(inst.problem.n(), 2 * 3 * 4);
        assert_eq!(inst.problem.num_eq(), 3);
        assert!(!inst.notes.is_empty());
    }
}
