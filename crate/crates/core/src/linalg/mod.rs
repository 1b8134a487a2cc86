//! Dense and sparse kernels shared by the forward solver, the penalty
//! backward pass and the KKT oracles.

pub mod cg;
pub mod dense;
pub mod indefinite;
pub mod ldl;
pub mod matrix;
pub mod ordering;
pub mod sparse;
pub mod spd;

pub use dense::{dot, norm2, norm_inf, DenseCholesky, DenseMatrix};
pub use indefinite::{indefinite_solve, IndefiniteSolution, QuasiDefiniteSolver, SolveMode};
pub use matrix::{weighted_gram, Matrix};
pub use sparse::CsrMatrix;
pub use spd::{spd_factorize, spd_factorize_system, spd_solve, FillStats, SpdFactor, SpdKind, SpdStrategy, SpdSystem};
