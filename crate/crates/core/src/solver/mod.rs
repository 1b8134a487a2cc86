//! Forward QP solve behind a pluggable solver interface.

mod backend;
pub mod ipm;
pub mod polish;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::problem::QpProblem;

pub use ipm::InteriorPoint;

/// Name of the built-in interior-point solver.
pub const BUILTIN_SOLVER: &str = "builtin-ipm";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub max_iterations: usize,
    /// Smallest relative diagonal regularization used by the linear solves.
    pub regularization_floor: f64,
    /// Refine the returned point by solving the equality-constrained problem
    /// on the identified active set.
    pub polish: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { eps_abs: 1e-6, max_iterations: 200, regularization_floor: 1e-10, polish: true }
    }
}

impl SolverSettings {
    pub fn with_eps_abs(eps_abs: f64) -> Self {
        SolverSettings { eps_abs, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_abs > 0.0) {
            return Err(Error::InvalidSetting("eps_abs must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidSetting("max_iterations must be at least 1"));
        }
        if !(self.regularization_floor >= 0.0) {
            return Err(Error::InvalidSetting("regularization_floor must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::MaxIter => "max_iter",
            Status::Infeasible => "infeasible",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub z: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub status: Status,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity_residual: f64,
    pub iterations: usize,
    pub polished: bool,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn require_optimal(&self) -> Result<()> {
        if self.is_optimal() {
            Ok(())
        } else {
            Err(Error::NotOptimal(self.status.as_str()))
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.complementarity_residual)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

/// KKT residual groups at `(z, ν, μ)`:
/// primal `max(‖Az − b‖∞, ‖[Cz − d]₊‖∞)`, dual `‖Pz + q + Aᵀν + Cᵀμ‖∞`,
/// complementarity `maxᵢ |μᵢ (Cz − d)ᵢ|`.
pub fn kkt_residuals(problem: &QpProblem, z: &[f64], nu: &[f64], mu: &[f64]) -> Residuals {
    let eq = problem.equality_residual(z);
    let slack = problem.inequality_slack(z);
    let viol = slack.iter().fold(0.0f64, |m, s| m.max(*s));
    let primal = norm_inf(&eq).max(viol);
    let dual = norm_inf(&problem.stationarity(z, nu, mu));
    let complementarity = mu.iter().zip(&slack).fold(0.0f64, |m, (u, s)| m.max((u * s).abs()));
    Residuals { primal, dual, complementarity }
}

/// Forward solver contract. Duals follow the convention
/// `Pz + q + Aᵀν + Cᵀμ = 0`, `μ ≥ 0`.
pub trait QpSolver {
    fn name(&self) -> &str;
    fn solve(&mut self, problem: &QpProblem, settings: &SolverSettings) -> QpSolution;
}

type Factory = Box<dyn Fn() -> Box<dyn QpSolver> + Send + Sync>;

/// Name → solver factory table. Each solve gets a fresh instance.
pub struct SolverRegistry {
    entries: Vec<(String, Factory)>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = SolverRegistry { entries: Vec::new() };
        r.register(BUILTIN_SOLVER, || Box::new(InteriorPoint::new()));
        r
    }
}

impl SolverRegistry {
    pub fn register(&mut self, name: &str, factory: impl Fn() -> Box<dyn QpSolver> + Send + Sync + 'static) {
        self.entries.retain(|(n, _)| n != name);
        self.entries.push((name.to_string(), Box::new(factory)));
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn QpSolver>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| Error::UnknownSolver(name.to_string()))
    }

    pub fn solve(&self, problem: &QpProblem, settings: &SolverSettings, solver_choice: &str) -> Result<QpSolution> {
        settings.validate()?;
        let mut solver = self.create(solver_choice)?;
        Ok(solver.solve(problem, settings))
    }
}

/// Solves with a solver from the default registry.
pub fn solve(problem: &QpProblem, settings: &SolverSettings, solver_choice: &str) -> Result<QpSolution> {
    SolverRegistry::default().solve(problem, settings, solver_choice)
}
