use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("quasi-definite factorization failed: pivot {pivot:e} at index {index}")]
    NotQuasiDefinite { index: usize, pivot: f64 },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },
    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    IndexOutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },
    #[error("P is asymmetric beyond tolerance (relative asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("storage mode mismatch: {0}")]
    StorageMismatch(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unknown solver '{0}'")]
    UnknownSolver(String),
    #[error("forward solve did not reach optimality (status {0})")]
    NotOptimal(&'static str),
    #[error("Hessian factorization failed: smallest pivot {pivot:e} at index {index}")]
    HessianFactorization { index: usize, pivot: f64 },
    #[error("relative discrepancy undefined: reference has zero norm")]
    ZeroReference,
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("invalid setting: {0}")]
    InvalidSetting(&'static str),
    #[error("singular KKT system (pivot index {index}, |pivot| {pivot:e})")]
    SingularKkt { index: usize, pivot: f64 },
    #[error("unknown parameter block '{0}'")]
    UnknownParamBlock(String),
    #[error("forward solve failed at a perturbed point (parameter {index})")]
    PerturbedSolveFailed { index: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
