//! Driven-dissipative Kerr cavity toolkit.
//!
//! The crate models a single nonlinear cavity mode with coherent drive and
//! one-photon loss, truncated to a finite Fock space. It provides the
//! Liouvillian (steady states, spectral gaps, time propagation), the
//! mean-field bistability analysis, the closed-form steady-state moments,
//! Husimi phase-space entropy production, and a non-Gaussianity witness,
//! plus a batch runner used by the `kerrq` binary.
//!
//! Conventions used throughout:
//! * `n_scale` is the pump-strength scale `N`; the drive amplitude entering
//!   the Hamiltonian is `sqrt(N) * epsilon` and the interaction is `u / N`.
//! * density matrices are stored dense, column-major, with `vec(rho)`
//!   stacking columns, so superoperators act on length `d^2` vectors.
//! * all rates are in units of the decay rate unless stated otherwise.

pub mod numerics;

pub mod operators;

pub mod liouville;

pub mod meanfield;

pub mod exactness;

pub mod dynamics;

pub mod phasespace;

pub mod gaussianity;

pub mod runner;

use num_complex::Complex64;

/// Crate-wide error type. Variants carry enough context to tell a physics
/// failure (truncation too small, positivity loss) from a solver failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Fock truncation too small: {0}")]
    Truncation(String),

    #[error("truncation exhausted at t = {t}: {detail}")]
    TruncationAtTime { t: f64, detail: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("steady state nearly degenerate: splitting {splitting:.3e}")]
    NearDegenerate {
        splitting: f64,
        candidates: Box<(operators::DensityMatrix, operators::DensityMatrix)>,
    },

    #[error("gamma pole at z = {0}")]
    GammaPole(Complex64),

    #[error("series precision exhausted: needed about {required_digits:.0} digits at |xi|^2 = {xi2:.3e}")]
    Precision { required_digits: f64, xi2: f64 },

    #[error("no bistable region for these parameters: {0}")]
    NoBistability(String),

    #[error("phase-space grid budget exceeded: {points} points requested")]
    GridBudget { points: usize },

    #[error("propagator step collapsed to tau = {tau:.3e}; Liouvillian too stiff")]
    Stiffness { tau: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
