//! Jacobi-preconditioned conjugate gradient for SPD operators.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::{axpy, dot, norm2};
use crate::error::LinalgError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    /// Relative residual target `‖b − Mx‖ / ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `M x = b` where `apply(v, out)` writes `M v` into `out` and
/// `diagonal` is the diagonal of `M` (used as the preconditioner).
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    diagonal: &[f64],
    b: &[f64],
    settings: CgSettings,
) -> Result<CgOutcome, LinalgError> {
    let n = b.len();
    if diagonal.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: diagonal.len() });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = diagonal.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut mp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..settings.max_iterations {
        apply(&p, &mut mp);
        let pmp = dot(&p, &mp);
        if !(pmp > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { index: it, pivot: pmp });
        }
        let step = rz / pmp;
        axpy(step, &p, &mut x);
        axpy(-step, &mp, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= settings.tolerance {
            return Ok(CgOutcome { x, iterations: it + 1, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::CgNotConverged { iterations: settings.max_iterations, residual: rel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::DenseMatrix;

    #[test]
    fn solves_small_spd_system() {
        let m = DenseMatrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let b = [1.0, 2.0, 3.0];
        let out = pcg(|v, o| m.mul_vec_into(v, o), &m.diagonal(), &b, CgSettings { tolerance: 1e-12, max_iterations: 30 })
            .unwrap();
        let r = m.mul_vec(&out.x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
        assert!(out.iterations <= 3 + 1);
    }

    #[test]
    fn reports_iteration_cap() {
        let m = DenseMatrix::from_fn(20, 20, |i, j| if i == j { 1.0 + i as f64 * 100.0 } else { 0.5 });
        let b = vec![1.0; 20];
        let err = pcg(|v, o| m.mul_vec_into(v, o), &m.diagonal(), &b, CgSettings { tolerance: 1e-14, max_iterations: 1 });
        assert!(matches!(err, Err(LinalgError::CgNotConverged { iterations: 1, .. })));
    }
}
