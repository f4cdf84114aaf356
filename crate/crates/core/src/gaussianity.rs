//! Non-Gaussianity via the covariance-matrix entropy bound.
//!
//! Among all states with the same mean and 2x2 quadrature covariance, the
//! Gaussian has maximal von Neumann entropy, so the difference between
//! that entropy and the actual one measures how far the state is from its
//! Gaussian reference. The reference entropy depends only on the
//! symplectic eigenvalue `nu_s = sqrt(det sigma)`.

use num_complex::Complex64;

use crate::numerics::hermitian_eigenvalues;
use crate::operators::DensityMatrix;
use crate::{Error, Result};

/// First and second moments of a state in `x = (a + a^dag)/sqrt(2)`,
/// `p = -i (a - a^dag)/sqrt(2)` conventions.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMoments {
    pub mean: Complex64,
    pub n_exp: f64,
    pub a2: Complex64,
    /// Symmetrized covariance `[[sigma_xx, sigma_xp], [sigma_xp, sigma_pp]]`.
    pub covariance: [[f64; 2]; 2],
    /// Symplectic eigenvalue, `>= 1/2` for any physical state.
    pub nu_s: f64,
}

/// Centered second moments of the state. Errors if the covariance violates
/// the uncertainty bound beyond tolerance, which signals a numerically
/// invalid state rather than an interesting one.
pub fn second_moments(rho: &DensityMatrix) -> Result<GaussianMoments> {
    let mean = rho.mean_a();
    let n_exp = rho.occupation();
    let a2 = rho.mean_a2();

    let n_c = n_exp - mean.norm_sqr();
    let c2 = a2 - mean * mean;
    let sigma_xx = 0.5 + n_c + c2.re;
    let sigma_pp = 0.5 + n_c - c2.re;
    let sigma_xp = c2.im;
    let det = sigma_xx * sigma_pp - sigma_xp * sigma_xp;
    if det < 0.0 {
        return Err(Error::InvalidState(format!(
            "covariance determinant {det:.3e} is negative"
        )));
    }
    let nu_s = det.sqrt();
    if nu_s < 0.5 - 1e-9 {
        return Err(Error::InvalidState(format!(
            "symplectic eigenvalue {nu_s:.12} violates the uncertainty bound"
        )));
    }
    Ok(GaussianMoments {
        mean,
        n_exp,
        a2,
        covariance: [[sigma_xx, sigma_xp], [sigma_xp, sigma_pp]],
        nu_s,
    })
}

/// Von Neumann entropy `-tr rho ln rho` from the eigenvalues.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let evals = hermitian_eigenvalues(rho.matrix().as_ref());
    let min = evals.first().copied().unwrap_or(0.0);
    if min < -1e-8 {
        return Err(Error::InvalidState(format!(
            "eigenvalue {min:.3e} is too negative for an entropy"
        )));
    }
    Ok(evals
        .iter()
        .filter(|&&l| l > 1e-14)
        .map(|&l| -l * l.ln())
        .sum())
}

/// Entropy of a single-mode Gaussian state with symplectic eigenvalue
/// `nu`: `(nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2)`.
pub fn f_thermal(nu: f64) -> f64 {
    let a = nu + 0.5;
    let b = nu - 0.5;
    let lower = if b > 0.0 { b * b.ln() } else { 0.0 };
    a * a.ln() - lower
}

/// Non-Gaussianity `G = S(Gaussian reference) - S(rho)`, clamped at zero.
/// The unclamped value (negative only by numerical error) is available
/// from [`non_gaussianity_raw`].
pub fn non_gaussianity(rho: &DensityMatrix) -> Result<f64> {
    non_gaussianity_raw(rho).map(|g| g.max(0.0))
}

/// Unclamped relative-entropy estimate; slight negatives expose the
/// numerical floor of the eigenvalue and covariance computations.
pub fn non_gaussianity_raw(rho: &DensityMatrix) -> Result<f64> {
    let moments = second_moments(rho)?;
    let s_vn = von_neumann_entropy(rho)?;
    Ok(f_thermal(moments.nu_s) - s_vn)
}
