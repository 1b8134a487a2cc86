//! Data-as-parameters indexing: `θ` ranges over the entries of one data
//! block. Vector blocks use their natural index; matrix blocks enumerate
//! stored entries in row-major order (every entry for dense storage).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::QpProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamBlock {
    P,
    Q,
    A,
    B,
    C,
    D,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 6] = [ParamBlock::P, ParamBlock::Q, ParamBlock::A, ParamBlock::B, ParamBlock::C, ParamBlock::D];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamBlock::P => "P",
            ParamBlock::Q => "q",
            ParamBlock::A => "A",
            ParamBlock::B => "b",
            ParamBlock::C => "C",
            ParamBlock::D => "d",
        }
    }

    pub fn parse(s: &str) -> Result<ParamBlock> {
        match s {
            "P" => Ok(ParamBlock::P),
            "q" => Ok(ParamBlock::Q),
            "A" => Ok(ParamBlock::A),
            "b" => Ok(ParamBlock::B),
            "C" => Ok(ParamBlock::C),
            "d" => Ok(ParamBlock::D),
            other => Err(Error::UnknownParamBlock(String::from(other))),
        }
    }

    pub fn is_matrix(self) -> bool {
        matches!(self, ParamBlock::P | ParamBlock::A | ParamBlock::C)
    }

    /// The data matrix behind a matrix block.
    pub fn matrix(self, problem: &QpProblem) -> Option<&Matrix> {
        match self {
            ParamBlock::P => Some(problem.p()),
            ParamBlock::A => Some(problem.a()),
            ParamBlock::C => Some(problem.c()),
            _ => None,
        }
    }
}

/// `(row, col)` of each matrix-block parameter.
pub fn matrix_entries(m: &Matrix) -> Vec<(usize, usize)> {
    match m {
        Matrix::Dense(d) => {
            let mut out = Vec::with_capacity(d.rows() * d.cols());
            for i in 0..d.rows() {
                for j in 0..d.cols() {
                    out.push((i, j));
                }
            }
            out
        }
        Matrix::Sparse(s) => s.triplets().map(|(i, j, _)| (i, j)).collect(),
    }
}

/// Number of scalar parameters in `block`.
pub fn param_count(problem: &QpProblem, block: ParamBlock) -> usize {
    match block {
        ParamBlock::Q => problem.n(),
        ParamBlock::B => problem.num_eq(),
        ParamBlock::D => problem.num_ineq(),
        _ => {
            let m = block.matrix(problem).expect("matrix block");
            match m {
                Matrix::Dense(d) => d.rows() * d.cols(),
                Matrix::Sparse(s) => s.nnz(),
            }
        }
    }
}

/// Parameters of `block` as `Vec<(row, col)>`; vector blocks report `(k, 0)`.
pub fn block_entries(problem: &QpProblem, block: ParamBlock) -> Vec<(usize, usize)> {
    match block.matrix(problem) {
        Some(m) => matrix_entries(m),
        None => (0..param_count(problem, block)).map(|k| (k, 0)).collect(),
    }
}
