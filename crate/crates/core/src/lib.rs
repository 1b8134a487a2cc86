#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;

pub use error::{Error, LinalgError, ProblemError, Result};
pub mod problem;
pub mod softplus;
pub mod solver;
pub mod benchgen;
pub mod active_set;
pub mod penalty;
pub mod params;
pub mod backward;
pub mod kkt;
