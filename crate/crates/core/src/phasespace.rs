//! Husimi representation and phase-space entropy rates.
//!
//! Every functional here is built from two fields sampled on a uniform
//! complex grid: the Husimi function `Q = <mu|rho|mu>/pi` and its companion
//! `A = <mu|a rho|mu>/pi`. The holomorphic structure of coherent states
//! gives the exact identity `dQ/dmubar = A - mu Q`, so all the derivative
//! combinations in the entropy rates reduce to algebra in `Q` and `A`; no
//! numerical differentiation is ever performed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::operators::{DensityMatrix, ModelParams};
use crate::{Error, Result};

/// Uniform square grid in the complex plane, centered near the state.
#[derive(Debug, Clone, Copy)]
pub struct PhaseGrid {
    pub center: Complex64,
    pub half_width: f64,
    pub h: f64,
    half_points: usize,
}

impl PhaseGrid {
    /// Grid covering `center +- half_width` in both quadratures at spacing
    /// `h`; the half width is rounded up to a whole number of cells.
    pub fn with_geometry(center: Complex64, half_width: f64, h: f64) -> Self {
        assert!(h > 0.0 && half_width > 0.0);
        let half_points = (half_width / h).ceil() as usize;
        Self {
            center,
            half_width,
            h,
            half_points,
        }
    }

    /// Points per side.
    pub fn side(&self) -> usize {
        2 * self.half_points + 1
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The point at column `jx`, row `ky` (both `0..side()`).
    pub fn mu(&self, jx: usize, ky: usize) -> Complex64 {
        let m = self.half_points as f64;
        self.center + self.h * Complex64::new(jx as f64 - m, ky as f64 - m)
    }

    /// Midpoint quadrature weight.
    pub fn weight(&self) -> f64 {
        self.h * self.h
    }

    /// Largest `|mu|` on the grid (corner estimate).
    pub fn outer_radius(&self) -> f64 {
        self.center.norm() + std::f64::consts::SQRT_2 * (self.half_points as f64) * self.h
    }
}

/// The two Bargmann fields sampled on a grid, row-major with index
/// `ky * side + jx`.
#[derive(Debug, Clone)]
pub struct HusimiField {
    pub grid: PhaseGrid,
    pub q: Vec<f64>,
    pub a: Vec<Complex64>,
    /// Quadrature of `q`; should be 1 within the grid tolerance.
    pub norm: f64,
}

/// Entropy rates at one instant, plus the balance defect once time
/// derivatives are available.
#[derive(Debug, Clone, Copy)]
pub struct EntropyRecord {
    pub s_q: f64,
    pub pi_j: f64,
    pub pi_ext: f64,
    pub pi_d: f64,
    pub pi_u: f64,
    pub phi: f64,
    pub phi_ext: f64,
    pub phi_q: f64,
    /// `|dS/dt - (Pi_U + Pi_J - Phi)|` with finite-difference `dS/dt`.
    pub balance_residual: f64,
}

/// Static entropy functionals of a single state, before the time
/// derivative needed for the balance residual exists.
#[derive(Debug, Clone, Copy)]
pub struct StepThermo {
    pub s_q: f64,
    pub pi_j: f64,
    pub pi_ext: f64,
    pub pi_d: f64,
    pub pi_u: f64,
    pub phi: f64,
    pub phi_ext: f64,
    pub phi_q: f64,
}

/// Relative norm defect the adaptive grid must reach.
const NORM_TOL: f64 = 1e-4;
/// Hard ceiling on grid size.
const POINT_BUDGET: usize = 10_000_000;
/// Relative `Q` floor below which `1/Q` integrands are excluded.
const LOW_Q_REL: f64 = 1e-14;

/// Evaluate both Bargmann fields on the given grid.
///
/// Cost is `O(points * d^2)`, parallel over grid rows. Errors if the Fock
/// truncation cannot represent coherent states at the outermost grid
/// radius, or if the sampled `Q` dips below the positivity tolerance.
pub fn husimi_field(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<HusimiField> {
    let d = rho.dim();
    let n_max = d - 1;
    let r = grid.outer_radius();
    // weight of the top Fock level in the farthest coherent state
    if r > 0.0 {
        let ln_fact: f64 = (1..=n_max).map(|k| (k as f64).ln()).sum();
        let log_guard = -r * r + 2.0 * n_max as f64 * r.ln() - ln_fact;
        if log_guard > (1e-14f64).ln() {
            return Err(Error::Truncation(format!(
                "coherent states at |mu| = {r:.2} are not resolved by {d} Fock levels"
            )));
        }
    }

    let side = grid.side();
    let mat = rho.matrix();
    let mut q = vec![0.0f64; side * side];
    let mut a = vec![Complex64::ZERO; side * side];

    q.par_chunks_mut(side)
        .zip(a.par_chunks_mut(side))
        .enumerate()
        .for_each(|(ky, (q_row, a_row))| {
            let mut coh = vec![Complex64::ZERO; d];
            let mut w = vec![Complex64::ZERO; d];
            for jx in 0..side {
                let mu = grid.mu(jx, ky);
                coh[0] = Complex64::new((-0.5 * mu.norm_sqr()).exp(), 0.0);
                for n in 1..d {
                    coh[n] = coh[n - 1] * mu / (n as f64).sqrt();
                }
                // w = rho * coh
                for i in 0..d {
                    let mut acc = Complex64::ZERO;
                    for n in 0..d {
                        acc += mat[(i, n)] * coh[n];
                    }
                    w[i] = acc;
                }
                let mut qv = Complex64::ZERO;
                for i in 0..d {
                    qv += coh[i].conj() * w[i];
                }
                let mut av = Complex64::ZERO;
                for m in 0..d - 1 {
                    av += ((m + 1) as f64).sqrt() * coh[m].conj() * w[m + 1];
                }
                let inv_pi = std::f64::consts::FRAC_1_PI;
                q_row[jx] = qv.re * inv_pi;
                a_row[jx] = av * inv_pi;
            }
        });

    let min_q = q.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_q < -1e-12 {
        return Err(Error::InvalidState(format!(
            "Husimi function dipped to {min_q:.3e}; state is not positive"
        )));
    }
    let norm: f64 = q.iter().sum::<f64>() * grid.weight();
    Ok(HusimiField {
        grid: *grid,
        q,
        a,
        norm,
    })
}

/// Mass of the outermost ring of cells, used to decide whether a norm
/// defect means "domain too small" or "spacing too coarse".
fn boundary_mass(field: &HusimiField) -> f64 {
    let side = field.grid.side();
    let mut s = 0.0;
    for ky in 0..side {
        for jx in 0..side {
            if ky == 0 || jx == 0 || ky == side - 1 || jx == side - 1 {
                s += field.q[ky * side + jx];
            }
        }
    }
    s * field.grid.weight()
}

/// Evaluate the field on an automatically sized grid: centered on `<a>`,
/// initial half width from the occupation, then expanded or refined until
/// the quadrature norm is within tolerance.
pub fn evaluate(rho: &DensityMatrix, h_override: Option<f64>) -> Result<HusimiField> {
    let center = rho.mean_a();
    let mut half_width = (1.5 * rho.occupation().max(0.0).sqrt() + 4.0).max(5.0);
    let mut h = h_override.unwrap_or(0.1);
    for _round in 0..12 {
        let grid = PhaseGrid::with_geometry(center, half_width, h);
        if grid.len() > POINT_BUDGET {
            return Err(Error::GridBudget { points: grid.len() });
        }
        let field = match husimi_field(rho, &grid) {
            // the box edge is still inside the top Fock level's support;
            // only a wider box can clear the guard
            Err(Error::Truncation(_)) => {
                half_width *= 1.5;
                continue;
            }
            other => other?,
        };
        let defect = (field.norm - 1.0).abs();
        if defect <= NORM_TOL {
            return Ok(field);
        }
        if boundary_mass(&field) > 0.25 * defect {
            half_width *= 1.5;
        } else {
            h *= 0.5;
        }
    }
    Err(Error::NonConvergence {
        what: "phase-space grid adaptation".into(),
        iterations: 12,
        residual: f64::NAN,
    })
}

/// Automatically sized grid for a state (the grid [`evaluate`] settles on).
pub fn build_grid(rho: &DensityMatrix) -> Result<PhaseGrid> {
    evaluate(rho, None).map(|f| f.grid)
}

/// Wehrl entropy `-integral Q ln Q`, with `0 ln 0 = 0`.
pub fn wehrl_entropy(field: &HusimiField) -> f64 {
    field
        .q
        .iter()
        .filter(|&&q| q >= 1e-300)
        .map(|&q| -q * q.ln())
        .sum::<f64>()
        * field.grid.weight()
}

/// Entropy flux and its extensive/quantum split, from operator
/// expectations alone: `Phi = 2 kappa <a^dag a>`, `Phi_ext = 2 kappa N
/// |alpha|^2`, and the remainder.
pub fn entropy_flux(
    rho: &DensityMatrix,
    alpha: Complex64,
    n_scale: f64,
    kappa: f64,
) -> (f64, f64, f64) {
    let phi = 2.0 * kappa * rho.occupation();
    let phi_ext = 2.0 * kappa * n_scale * alpha.norm_sqr();
    (phi, phi_ext, phi - phi_ext)
}

fn low_q_threshold(field: &HusimiField) -> f64 {
    let qmax = field.q.iter().cloned().fold(0.0f64, f64::max);
    LOW_Q_REL * qmax
}

/// Entropy production rate of the dissipative current,
/// `(2/kappa) integral |J|^2 / Q` with `J = -kappa A`.
pub fn pi_j(field: &HusimiField, kappa: f64) -> f64 {
    let floor = low_q_threshold(field);
    field
        .q
        .iter()
        .zip(&field.a)
        .filter(|(&q, _)| q > floor)
        .map(|(&q, a)| 2.0 * kappa * a.norm_sqr() / q)
        .sum::<f64>()
        * field.grid.weight()
}

/// Split of [`pi_j`] into the extensive part carried by the mean field and
/// the fluctuation part carried by the displaced current.
pub fn pi_d(field: &HusimiField, alpha: Complex64, n_scale: f64, kappa: f64) -> (f64, f64) {
    let c = alpha * n_scale.sqrt();
    let pi_ext = 2.0 * kappa * c.norm_sqr();
    let floor = low_q_threshold(field);
    let pi_d = field
        .q
        .iter()
        .zip(&field.a)
        .filter(|(&q, _)| q > floor)
        .map(|(&q, a)| 2.0 * kappa * (a - c * q).norm_sqr() / q)
        .sum::<f64>()
        * field.grid.weight();
    (pi_ext, pi_d)
}

/// Entropy rate of the interaction term. In the Bargmann fields the
/// integrand is `U Im{ mubar^2 A^2 / Q - 2 |mu|^2 mubar A }`; the sign of
/// the cross term is fixed by agreement with the quadratic-derivative form
/// of the rate (see the cross-validation tests).
pub fn pi_u(field: &HusimiField, u_int: f64) -> f64 {
    if u_int == 0.0 {
        return 0.0;
    }
    let floor = low_q_threshold(field);
    let side = field.grid.side();
    let mut total = 0.0;
    for ky in 0..side {
        for jx in 0..side {
            let idx = ky * side + jx;
            let q = field.q[idx];
            if q <= floor {
                continue;
            }
            let mu = field.grid.mu(jx, ky);
            let a = field.a[idx];
            let mubar = mu.conj();
            let term = (mubar * mubar * a * a / q).im - 2.0 * mu.norm_sqr() * (mubar * a).im;
            total += term;
        }
    }
    u_int * total * field.grid.weight()
}

/// Phase-space evaluation of the flux, `2 kappa integral Re{mubar A}`.
/// Redundant with [`entropy_flux`]; kept as an independent cross-check of
/// the sampled fields.
pub fn flux_quadrature(field: &HusimiField, kappa: f64) -> f64 {
    let side = field.grid.side();
    let mut total = 0.0;
    for ky in 0..side {
        for jx in 0..side {
            let mu = field.grid.mu(jx, ky);
            total += (mu.conj() * field.a[ky * side + jx]).re;
        }
    }
    2.0 * kappa * total * field.grid.weight()
}

/// All static functionals of one state under the model `p`, with the mean
/// field taken from the state itself.
pub fn step_thermo(rho: &DensityMatrix, p: &ModelParams, h_override: Option<f64>) -> Result<StepThermo> {
    let alpha = rho.mean_a() / p.n_scale.sqrt();
    let field = evaluate(rho, h_override)?;
    let (phi, phi_ext, phi_q) = entropy_flux(rho, alpha, p.n_scale, p.kappa);
    let (pi_ext, pi_dv) = pi_d(&field, alpha, p.n_scale, p.kappa);
    Ok(StepThermo {
        s_q: wehrl_entropy(&field),
        pi_j: pi_j(&field, p.kappa),
        pi_ext,
        pi_d: pi_dv,
        pi_u: pi_u(&field, p.interaction()),
        phi,
        phi_ext,
        phi_q,
    })
}

fn record_from(step: &StepThermo, ds_dt: f64) -> EntropyRecord {
    EntropyRecord {
        s_q: step.s_q,
        pi_j: step.pi_j,
        pi_ext: step.pi_ext,
        pi_d: step.pi_d,
        pi_u: step.pi_u,
        phi: step.phi,
        phi_ext: step.phi_ext,
        phi_q: step.phi_q,
        balance_residual: (ds_dt - (step.pi_u + step.pi_j - step.phi)).abs(),
    }
}

/// Attach balance residuals to a time series of static functionals.
/// Central differences inside, one-sided three-point stencils at the ends.
pub fn assemble_records(steps: &[StepThermo], dt: f64) -> Vec<EntropyRecord> {
    let n = steps.len();
    let s = |i: usize| steps[i].s_q;
    (0..n)
        .map(|i| {
            let ds_dt = if n == 1 {
                f64::NAN
            } else if n == 2 {
                (s(1) - s(0)) / dt
            } else if i == 0 {
                (-3.0 * s(0) + 4.0 * s(1) - s(2)) / (2.0 * dt)
            } else if i == n - 1 {
                (3.0 * s(n - 1) - 4.0 * s(n - 2) + s(n - 3)) / (2.0 * dt)
            } else {
                (s(i + 1) - s(i - 1)) / (2.0 * dt)
            };
            record_from(&steps[i], ds_dt)
        })
        .collect()
}

/// Entropy record at the middle of three consecutive output states.
pub fn entropy_record(
    states: &[DensityMatrix; 3],
    dt: f64,
    p: &ModelParams,
) -> Result<EntropyRecord> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let s0 = step_thermo(&states[0], p, None)?;
    let s1 = step_thermo(&states[1], p, None)?;
    let s2 = step_thermo(&states[2], p, None)?;
    let ds_dt = (s2.s_q - s0.s_q) / (2.0 * dt);
    Ok(record_from(&s1, ds_dt))
}
