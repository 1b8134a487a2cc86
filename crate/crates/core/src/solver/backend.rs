//! Linear algebra for the interior-point Newton systems
//!
//! ```text
//! [ P  Aᵀ  Cᵀ   ] [Δz]   [r₁]
//! [ A  0   0    ] [Δν] = [r₂]
//! [ C  0  −D⁻¹  ] [Δμ]   [r₃]
//! ```
//!
//! with `D = diag(μ/s)`. Three backends:
//! * `Schur`: dense, eliminates `Δz` with a Cholesky factor of `P` computed
//!   once; each iteration factors the `(p+m)`-square matrix `F P⁻¹ Fᵀ + E`.
//!   Chosen when `p + m ≤ n`.
//! * `DenseQd`: dense quasi-definite `LDLᵀ` of `[P + CᵀDC, Aᵀ; A, 0]`
//!   (regularized).
//! * `SparseQd`: the same system in sparse form, symbolic analysis done once.
//!
//! Every solve is followed by iterative refinement against the exact system,
//! which removes the effect of the regularization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::LinalgError;
use crate::linalg::dense::{weighted_gram_dense, DenseLdl};
use crate::linalg::ldl::{SparseLdl, SparseLdlSymbolic};
use crate::linalg::{norm_inf, CsrMatrix, DenseCholesky, DenseMatrix, Matrix};
use crate::problem::QpProblem;

const REFINE_STEPS: usize = 3;

pub(crate) struct NewtonSystem<'a> {
    problem: &'a QpProblem,
    backend: Backend,
    d: Vec<f64>,
    reg: f64,
    reg_floor: f64,
}

enum Backend {
    Schur(Schur),
    DenseQd(DenseQd),
    SparseQd(SparseQd),
}

struct Schur {
    chol_p: DenseCholesky,
    /// `Y = L⁻¹ Fᵀ` (n × k) with `F = [A; C]`.
    y: DenseMatrix,
    g0: DenseMatrix,
    factor: Option<DenseCholesky>,
}

struct DenseQd {
    p: DenseMatrix,
    c: DenseMatrix,
    a: DenseMatrix,
    factor: Option<DenseLdl>,
}

struct SparseQd {
    pattern: CsrMatrix,
    symbolic: SparseLdlSymbolic,
    p_pos: Vec<usize>,
    a_pos: Vec<(usize, usize)>,
    /// For each row of C, positions of products `(c_a, c_b)` in order.
    c_pair_ptr: Vec<usize>,
    c_pair_pos: Vec<usize>,
    diag_pos: Vec<usize>,
    factor: Option<SparseLdl>,
}

fn dense_p_scale(problem: &QpProblem) -> f64 {
    problem.p().diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

impl<'a> NewtonSystem<'a> {
    pub fn new(problem: &'a QpProblem, reg_floor: f64) -> Result<Self, LinalgError> {
        let n = problem.n();
        let k = problem.num_eq() + problem.num_ineq();
        let scale = dense_p_scale(problem);
        let reg = reg_floor * scale;
        let backend = if problem.p().is_sparse() {
            Backend::SparseQd(SparseQd::new(problem)?)
        } else if k <= n {
            match Schur::new(problem, reg) {
                Ok(s) => Backend::Schur(s),
                Err(_) => Backend::DenseQd(DenseQd::new(problem)),
            }
        } else {
            Backend::DenseQd(DenseQd::new(problem))
        };
        Ok(NewtonSystem { problem, backend, d: vec![1.0; problem.num_ineq()], reg, reg_floor: reg.max(1e-14) })
    }

    /// Factors for the scaling `D = diag(d)`, raising the regularization on
    /// failure.
    pub fn factor(&mut self, d: &[f64]) -> Result<(), LinalgError> {
        self.d.copy_from_slice(d);
        let mut reg = self.reg.max(self.reg_floor);
        let mut last_err = None;
        for _ in 0..6 {
            let res = match &mut self.backend {
                Backend::Schur(s) => s.factor(self.problem, d, reg),
                Backend::DenseQd(s) => s.factor(d, reg),
                Backend::SparseQd(s) => s.factor(self.problem, d, reg),
            };
            match res {
                Ok(()) => return Ok(()),
                Err(e) => {
                    last_err = Some(e);
                    reg *= 100.0;
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn raw_solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        match &self.backend {
            Backend::Schur(s) => s.solve(r1, r2, r3),
            Backend::DenseQd(s) => s.solve(r1, r2, r3, &self.d),
            Backend::SparseQd(s) => s.solve(self.problem, r1, r2, r3, &self.d),
        }
    }

    /// Exact residual `rhs − K x`.
    fn residual(
        &self,
        x: (&[f64], &[f64], &[f64]),
        rhs: (&[f64], &[f64], &[f64]),
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pr = self.problem;
        let (dz, dnu, dmu) = x;
        let mut t1 = pr.p().mul_vec(dz);
        pr.a().tr_mul_vec_acc(dnu, &mut t1);
        pr.c().tr_mul_vec_acc(dmu, &mut t1);
        let t2 = pr.a().mul_vec(dz);
        let mut t3 = pr.c().mul_vec(dz);
        for i in 0..t3.len() {
            t3[i] -= dmu[i] / self.d[i];
        }
        let sub = |r: &[f64], t: Vec<f64>| r.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<f64>>();
        (sub(rhs.0, t1), sub(rhs.1, t2), sub(rhs.2, t3))
    }

    /// Solves with iterative refinement.
    pub fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut dz, mut dnu, mut dmu) = self.raw_solve(r1, r2, r3);
        let norm = |v: &(Vec<f64>, Vec<f64>, Vec<f64>)| norm_inf(&v.0).max(norm_inf(&v.1)).max(norm_inf(&v.2));
        let mut res = self.residual((&dz, &dnu, &dmu), (r1, r2, r3));
        let mut res_norm = norm(&res);
        for _ in 0..REFINE_STEPS {
            if !(res_norm > 0.0) {
                break;
            }
            let (cz, cnu, cmu) = self.raw_solve(&res.0, &res.1, &res.2);
            let tz: Vec<f64> = dz.iter().zip(&cz).map(|(a, b)| a + b).collect();
            let tnu: Vec<f64> = dnu.iter().zip(&cnu).map(|(a, b)| a + b).collect();
            let tmu: Vec<f64> = dmu.iter().zip(&cmu).map(|(a, b)| a + b).collect();
            let new_res = self.residual((&tz, &tnu, &tmu), (r1, r2, r3));
            let new_norm = norm(&new_res);
            if !(new_norm < res_norm) {
                break;
            }
            dz = tz;
            dnu = tnu;
            dmu = tmu;
            res = new_res;
            res_norm = new_norm;
        }
        (dz, dnu, dmu)
    }
}

/// `Δμ = D (C Δz − r₃)`
fn recover_mu(c: &Matrix, dz: &[f64], r3: &[f64], d: &[f64]) -> Vec<f64> {
    let mut cz = c.mul_vec(dz);
    for i in 0..cz.len() {
        cz[i] = d[i] * (cz[i] - r3[i]);
    }
    cz
}

impl Schur {
    fn new(problem: &QpProblem, reg: f64) -> Result<Self, LinalgError> {
        let p = problem.p().to_dense();
        let chol_p = match DenseCholesky::factor(&p, 0.0) {
            Ok(c) => c,
            Err(_) => {
                let mut pr = p.clone();
                for i in 0..pr.rows() {
                    pr.add_to(i, i, reg.max(1e-12));
                }
                DenseCholesky::factor(&pr, 0.0)?
            }
        };
        let f = problem.a().to_dense().vstack(&problem.c().to_dense());
        let mut y = f.transpose();
        chol_p.forward_matrix_in_place(&mut y);
        let g0 = y.tr_matmul(&y);
        let mut g0s = g0;
        g0s.symmetrize();
        Ok(Schur { chol_p, y, g0: g0s, factor: None })
    }

    fn factor(&mut self, problem: &QpProblem, d: &[f64], reg: f64) -> Result<(), LinalgError> {
        let p = problem.num_eq();
        let mut g = self.g0.clone();
        let scale = g.diagonal().iter().fold(1.0f64, |m, v| m.max(*v));
        for i in 0..p {
            g.add_to(i, i, reg * scale);
        }
        for (i, di) in d.iter().enumerate() {
            g.add_to(p + i, p + i, 1.0 / di);
        }
        self.factor = Some(DenseCholesky::factor(&g, 0.0)?);
        Ok(())
    }

    fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut w = r1.to_vec();
        self.chol_p.forward_in_place(&mut w);
        let mut dy = self.y.tr_mul_vec(&w);
        for (i, v) in r2.iter().chain(r3.iter()).enumerate() {
            dy[i] -= v;
        }
        self.factor.as_ref().expect("factored").solve_in_place(&mut dy);
        let ydy = self.y.mul_vec(&dy);
        for (wi, yi) in w.iter_mut().zip(&ydy) {
            *wi -= yi;
        }
        self.chol_p.backward_in_place(&mut w);
        let p = r2.len();
        let dmu = dy.split_off(p);
        (w, dy, dmu)
    }
}

impl DenseQd {
    fn new(problem: &QpProblem) -> Self {
        DenseQd {
            p: problem.p().to_dense(),
            c: problem.c().to_dense(),
            a: problem.a().to_dense(),
            factor: None,
        }
    }

    fn factor(&mut self, d: &[f64], reg: f64) -> Result<(), LinalgError> {
        let n = self.p.rows();
        let np = self.a.rows();
        let mut h = self.p.clone();
        weighted_gram_dense(&self.c, d, &mut h);
        let mut k = DenseMatrix::zeros(n + np, n + np);
        for i in 0..n {
            k.row_mut(i)[..n].copy_from_slice(h.row(i));
            k.add_to(i, i, reg);
        }
        for j in 0..np {
            for (c, v) in self.a.row(j).iter().enumerate() {
                k.set(n + j, c, *v);
                k.set(c, n + j, *v);
            }
            k.set(n + j, n + j, -reg);
        }
        self.factor = Some(DenseLdl::factor(&k, Some(n))?);
        Ok(())
    }

    fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = r1.len();
        let mut rhs = vec![0.0; n + r2.len()];
        rhs[..n].copy_from_slice(r1);
        let dr3: Vec<f64> = r3.iter().zip(d).map(|(a, b)| a * b).collect();
        self.c.tr_mul_vec_acc(&dr3, &mut rhs[..n]);
        rhs[n..].copy_from_slice(r2);
        self.factor.as_ref().expect("factored").solve_in_place(&mut rhs);
        let dnu = rhs.split_off(n);
        let mut dmu = self.c.mul_vec(&rhs);
        for i in 0..dmu.len() {
            dmu[i] = d[i] * (dmu[i] - r3[i]);
        }
        (rhs, dnu, dmu)
    }
}

impl SparseQd {
    fn new(problem: &QpProblem) -> Result<Self, LinalgError> {
        let n = problem.n();
        let np = problem.num_eq();
        let dim = n + np;
        let p = problem.p().to_csr();
        let a = problem.a().to_csr();
        let c = problem.c().to_csr();
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..dim {
            trip.push((i, i, 1.0));
        }
        trip.extend(p.triplets().map(|(i, j, _)| (i, j, 1.0)));
        for (j, k, _) in a.triplets() {
            trip.push((n + j, k, 1.0));
            trip.push((k, n + j, 1.0));
        }
        for i in 0..c.rows() {
            let (cols, _) = c.row(i);
            for &x in cols {
                for &y in cols {
                    trip.push((x, y, 1.0));
                }
            }
        }
        let pattern = CsrMatrix::from_triplets(dim, dim, &trip)?;
        let pos = |i: usize, j: usize| pattern.position(i, j).expect("entry in pattern");
        let p_pos = p.triplets().map(|(i, j, _)| pos(i, j)).collect();
        let a_pos = a.triplets().map(|(j, k, _)| (pos(n + j, k), pos(k, n + j))).collect();
        let mut c_pair_ptr = vec![0usize];
        let mut c_pair_pos = Vec::new();
        for i in 0..c.rows() {
            let (cols, _) = c.row(i);
            for &x in cols {
                for &y in cols {
                    c_pair_pos.push(pos(x, y));
                }
            }
            c_pair_ptr.push(c_pair_pos.len());
        }
        let diag_pos = (0..dim).map(|i| pos(i, i)).collect();
        let symbolic = SparseLdlSymbolic::analyze(&pattern)?;
        Ok(SparseQd { pattern, symbolic, p_pos, a_pos, c_pair_ptr, c_pair_pos, diag_pos, factor: None })
    }

    fn factor(&mut self, problem: &QpProblem, d: &[f64], reg: f64) -> Result<(), LinalgError> {
        let n = problem.n();
        let mut values = vec![0.0; self.pattern.nnz()];
        if let Matrix::Sparse(p) = problem.p() {
            for (e, v) in p.values().iter().enumerate() {
                values[self.p_pos[e]] += v;
            }
        } else {
            for (e, (_, _, v)) in problem.p().to_csr().triplets().enumerate() {
                values[self.p_pos[e]] += v;
            }
        }
        let a = problem.a().to_csr();
        for (e, v) in a.values().iter().enumerate() {
            let (p1, p2) = self.a_pos[e];
            values[p1] += v;
            values[p2] += v;
        }
        let c = problem.c().to_csr();
        for i in 0..c.rows() {
            let (_, vals) = c.row(i);
            let mut t = self.c_pair_ptr[i];
            for x in vals {
                let s = d[i] * x;
                for y in vals {
                    values[self.c_pair_pos[t]] += s * y;
                    t += 1;
                }
            }
        }
        for (i, &p) in self.diag_pos.iter().enumerate() {
            values[p] += if i < n { reg } else { -reg };
        }
        self.factor = Some(self.symbolic.factor(&values, Some(n))?);
        Ok(())
    }

    fn solve(&self, problem: &QpProblem, r1: &[f64], r2: &[f64], r3: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = r1.len();
        let mut rhs = vec![0.0; n + r2.len()];
        rhs[..n].copy_from_slice(r1);
        let dr3: Vec<f64> = r3.iter().zip(d).map(|(a, b)| a * b).collect();
        problem.c().tr_mul_vec_acc(&dr3, &mut rhs[..n]);
        rhs[n..].copy_from_slice(r2);
        self.factor.as_ref().expect("factored").solve_in_place(&mut rhs);
        let dnu = rhs.split_off(n);
        let dmu = recover_mu(problem.c(), &rhs, r3, d);
        (rhs, dnu, dmu)
    }
}
