//! Numerical backends shared by the physics modules: dense helpers, sparse
//! assembly, matrix exponentials, and Krylov eigensolvers.

pub mod cbig;
pub mod eigs;
pub mod expm;
pub mod sparse;

use faer::{Mat, MatRef};
use num_complex::Complex64;

/// Trace of a square dense matrix.
pub fn trace(m: MatRef<'_, Complex64>) -> Complex64 {
    let mut t = Complex64::ZERO;
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// `tr(op * rho)` without forming the product.
pub fn expectation(op: MatRef<'_, Complex64>, rho: MatRef<'_, Complex64>) -> Complex64 {
    let d = rho.nrows();
    let mut t = Complex64::ZERO;
    for i in 0..d {
        for k in 0..d {
            t += op[(i, k)] * rho[(k, i)];
        }
    }
    t
}

/// Largest entrywise deviation from Hermiticity, `max |m - m^dag|`.
pub fn herm_defect(m: MatRef<'_, Complex64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Symmetrize in place, `m <- (m + m^dag) / 2`.
pub fn hermitize(m: &mut Mat<Complex64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in i..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)].im = 0.0;
    }
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized
/// first so callers can pass matrices with round-off level defects.
pub fn hermitian_eigenvalues(m: MatRef<'_, Complex64>) -> Vec<f64> {
    let mut h = m.to_owned();
    hermitize(&mut h);
    h.self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("hermitian eigendecomposition")
}
