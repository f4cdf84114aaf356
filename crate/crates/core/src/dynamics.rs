//! Time evolution under the Liouvillian and the sudden-quench protocol:
//! prepare the steady state at one pump value, switch the pump, and record
//! observables and entropy rates on a fixed output cadence.

use num_complex::Complex64;

use crate::gaussianity;
use crate::liouville::{build_liouvillian, solve_ness, unvec, Superoperator};
use crate::numerics::expm::expm_multiply;
use crate::operators::{choose_truncation, DensityMatrix, ModelParams};
use crate::phasespace::{self, EntropyRecord, StepThermo};
use crate::{numerics, Error, Result};

/// Protocol parameters of a sudden quench. Model constants (detuning,
/// loss, interaction) live in [`ModelParams`]; this struct carries only
/// what the protocol itself varies.
#[derive(Debug, Clone, Copy)]
pub struct QuenchSpec {
    pub eps_i: f64,
    pub eps_f: f64,
    pub n_scale: f64,
    pub t_max: f64,
    /// Output cadence; inner substeps adapt independently.
    pub dt_out: f64,
    /// Local error tolerance per output step for the propagator.
    pub tol: f64,
    /// Fock cutoff override; `None` sizes it from the mean field.
    pub n_max: Option<usize>,
    /// Phase-space grid spacing override.
    pub grid_h: Option<f64>,
    /// Whether to evaluate the Husimi entropy rates at every output step.
    pub with_entropy: bool,
}

impl QuenchSpec {
    pub fn new(eps_i: f64, eps_f: f64, n_scale: f64, t_max: f64) -> Self {
        Self {
            eps_i,
            eps_f,
            n_scale,
            t_max,
            dt_out: 0.2,
            tol: 1e-8,
            n_max: None,
            grid_h: None,
            with_entropy: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eps_i, self.eps_f, self.n_scale, self.t_max, self.dt_out, self.tol]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!("non-finite entry in {self:?}")));
        }
        if self.eps_i < 0.0 || self.eps_f < 0.0 {
            return Err(Error::InvalidParameter("pump values must be nonnegative".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter("t_max must be positive".into()));
        }
        if !(self.dt_out > 0.0 && self.dt_out <= self.t_max) {
            return Err(Error::InvalidParameter(
                "dt_out must satisfy 0 < dt_out <= t_max".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Observables of one quench run on the output grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Bare first moment `<a>`.
    pub mean_a: Vec<Complex64>,
    /// Rescaled amplitude `<a>/sqrt(N)`.
    pub alpha: Vec<Complex64>,
    /// Bare occupation `<a^dag a>`.
    pub occupation: Vec<f64>,
    /// Non-Gaussianity measure per step.
    pub gaussianity: Vec<f64>,
    /// Entropy rates, present when the spec asked for them.
    pub records: Option<Vec<EntropyRecord>>,
    pub final_state: DensityMatrix,
    /// Fock dimension the run used.
    pub fock_dim: usize,
}

/// Action of `exp(L dt)` on a state. Inner Krylov substeps adapt to `tol`;
/// the result is re-Hermitized, trace-corrected, and revalidated, so a state
/// escaping the truncation surfaces here as a truncation error.
pub fn propagate(l: &Superoperator, rho: &DensityMatrix, dt: f64, tol: f64) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if rho.dim() != l.dim() {
        return Err(Error::InvalidDimension(format!(
            "state dimension {} does not match Liouvillian dimension {}",
            rho.dim(),
            l.dim()
        )));
    }
    let x = rho.vectorize();
    let (y, stats) = expm_multiply(|v, out| l.apply_vec(v, out), x.len(), &x, dt, tol)?;
    let mut m = unvec(l.dim(), &y);
    let tr = numerics::trace(m.as_ref());
    let drift = (tr - Complex64::ONE).norm();
    if drift > 1e-10 {
        return Err(Error::NonConvergence {
            what: "trace preservation in a propagation step".into(),
            iterations: stats.substeps,
            residual: drift,
        });
    }
    numerics::hermitize(&mut m);
    let tr = numerics::trace(m.as_ref()).re;
    let scale = Complex64::new(1.0 / tr, 0.0);
    let m = faer::Scale(scale) * &m;
    DensityMatrix::from_matrix(m)
}

/// Run one sudden quench: steady state at `eps_i`, evolution under the
/// generator at `eps_f`, observables every `dt_out`.
pub fn run_quench(model: &ModelParams, spec: &QuenchSpec) -> Result<Trajectory> {
    spec.validate()?;
    let p_i = ModelParams::new(model.delta, model.kappa, model.u, spec.eps_i, spec.n_scale)?;
    let p_f = p_i.with_epsilon(spec.eps_f)?;
    let n_max = spec
        .n_max
        .unwrap_or_else(|| choose_truncation(&p_i).max(choose_truncation(&p_f)));
    let d = n_max + 1;
    let l_i = build_liouvillian(&p_i, d)?;
    let l_f = build_liouvillian(&p_f, d)?;
    let mut rho = solve_ness(&l_i)?.rho;

    let n_steps = (spec.t_max / spec.dt_out - 1e-9).ceil().max(1.0) as usize;
    let sqrt_n = spec.n_scale.sqrt();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut mean_a = Vec::with_capacity(n_steps + 1);
    let mut alpha = Vec::with_capacity(n_steps + 1);
    let mut occupation = Vec::with_capacity(n_steps + 1);
    let mut gmeasure = Vec::with_capacity(n_steps + 1);
    let mut thermo: Vec<StepThermo> = Vec::new();

    for i in 0..=n_steps {
        let t = i as f64 * spec.dt_out;
        times.push(t);
        let m = rho.mean_a();
        mean_a.push(m);
        alpha.push(m / sqrt_n);
        occupation.push(rho.occupation());
        gmeasure.push(gaussianity::non_gaussianity(&rho)?);
        if spec.with_entropy {
            // the Krylov propagator keeps trace and Hermiticity but can
            // leave eigenvalues a few 1e-11 negative; the 1/Q functionals
            // need an exactly positive state, so project onto the cone
            let positive = crate::liouville::clip_to_state(rho.matrix().clone(), Some(-1e-8))?;
            thermo.push(phasespace::step_thermo(&positive, &p_f, spec.grid_h)?);
        }
        if i < n_steps {
            rho = propagate(&l_f, &rho, spec.dt_out, spec.tol).map_err(|e| match e {
                Error::Truncation(detail) => Error::TruncationAtTime {
                    t: (i + 1) as f64 * spec.dt_out,
                    detail,
                },
                other => other,
            })?;
        }
    }

    let records = if spec.with_entropy {
        Some(phasespace::assemble_records(&thermo, spec.dt_out))
    } else {
        None
    };
    Ok(Trajectory {
        times,
        mean_a,
        alpha,
        occupation,
        gaussianity: gmeasure,
        records,
        final_state: rho,
        fock_dim: d,
    })
}
