//! Fock-space operators for the driven Kerr mode and the parameter set that
//! defines the model.

use faer::Mat;
use num_complex::Complex64;

use crate::numerics;
use crate::{Error, Result};

/// Dense operator on the truncated Fock basis.
pub type FockOperator = Mat<Complex64>;

/// Physical parameters of the driven-dissipative Kerr mode.
///
/// The stored pump `epsilon` and interaction `u` are the scale-invariant
/// quantities; the coefficients that enter the Hamiltonian are the derived
/// [`pump`](Self::pump) `sqrt(N) * epsilon` and
/// [`interaction`](Self::interaction) `u / N`, recomputed on demand so the
/// two views can never drift apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub delta: f64,
    pub kappa: f64,
    pub u: f64,
    pub epsilon: f64,
    pub n_scale: f64,
}

impl ModelParams {
    pub fn new(delta: f64, kappa: f64, u: f64, epsilon: f64, n_scale: f64) -> Result<Self> {
        let p = Self {
            delta,
            kappa,
            u,
            epsilon,
            n_scale,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let all_finite = [self.delta, self.kappa, self.u, self.epsilon, self.n_scale]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter(format!("non-finite entry in {self:?}")));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.u < 0.0 {
            return Err(Error::InvalidParameter(format!("u must be nonnegative, got {}", self.u)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.n_scale < 1.0 {
            return Err(Error::InvalidParameter(format!("n_scale must be at least 1, got {}", self.n_scale)));
        }
        Ok(())
    }

    /// Drive amplitude entering the Hamiltonian, `sqrt(N) * epsilon`.
    pub fn pump(&self) -> f64 {
        self.n_scale.sqrt() * self.epsilon
    }

    /// Kerr coefficient entering the Hamiltonian, `u / N`.
    pub fn interaction(&self) -> f64 {
        self.u / self.n_scale
    }

    /// Same parameters at a different pump, for quench protocols and sweeps.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.delta, self.kappa, self.u, epsilon, self.n_scale)
    }

    /// Same parameters at a different scale.
    pub fn with_n_scale(&self, n_scale: f64) -> Result<Self> {
        Self::new(self.delta, self.kappa, self.u, self.epsilon, n_scale)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 1 {
        Err(Error::InvalidDimension("Fock dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Annihilation operator: `sqrt(n)` on the first superdiagonal.
pub fn annihilation(d: usize) -> Result<FockOperator> {
    check_dim(d)?;
    let mut a = Mat::<Complex64>::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Number operator `a^dag a`, diagonal `0..d-1`.
pub fn number_operator(d: usize) -> Result<FockOperator> {
    check_dim(d)?;
    let mut n_op = Mat::<Complex64>::zeros(d, d);
    for n in 0..d {
        n_op[(n, n)] = Complex64::new(n as f64, 0.0);
    }
    Ok(n_op)
}

/// Hamiltonian of the driven Kerr mode in the frame rotating with the pump:
/// detuning, coherent drive, and the two-photon interaction.
pub fn build_hamiltonian(p: &ModelParams, d: usize) -> Result<FockOperator> {
    check_dim(d)?;
    p.validate()?;
    let pump = p.pump();
    let u_int = p.interaction();
    let mut h = Mat::<Complex64>::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        h[(n, n)] = Complex64::new(p.delta * nf + 0.5 * u_int * nf * (nf - 1.0), 0.0);
    }
    for m in 0..d.saturating_sub(1) {
        let c = pump * ((m + 1) as f64).sqrt();
        h[(m + 1, m)] = Complex64::new(0.0, c);
        h[(m, m + 1)] = Complex64::new(0.0, -c);
    }
    Ok(h)
}

/// Fock cutoff `n_max` sized from the mean-field occupation: three times the
/// predicted photon number plus a fixed margin. The returned value is the
/// highest retained Fock index; the matrix dimension is `n_max + 1`.
pub fn choose_truncation(p: &ModelParams) -> usize {
    let n_ref = crate::meanfield::reference_occupation(p);
    (3.0 * p.n_scale * n_ref + 20.0).ceil() as usize
}

/// Validated system state on the truncated Fock basis.
///
/// Construction checks Hermiticity, unit trace, and (for spaces large
/// enough for the notion to make sense) that the occupation tail near the
/// cutoff is negligible, so downstream code can rely on a well-formed state.
/// Positivity is not checked on construction; use
/// [`min_eigenvalue`](Self::min_eigenvalue) where it matters.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: Mat<Complex64>,
}

/// Tail checks only apply above this dimension; below it the "last five
/// levels" are most of the space.
const TAIL_CHECK_MIN_DIM: usize = 11;

pub const HERM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const TAIL_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn from_matrix(mat: Mat<Complex64>) -> Result<Self> {
        let d = mat.nrows();
        if d == 0 || mat.ncols() != d {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        for j in 0..d {
            for i in 0..d {
                let z = mat[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidState(format!("non-finite entry at ({i},{j})")));
                }
            }
        }
        let herm = numerics::herm_defect(mat.as_ref());
        if herm > HERM_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity defect {herm:.3e} exceeds {HERM_TOL:.0e}"
            )));
        }
        let tr = numerics::trace(mat.as_ref());
        if (tr - Complex64::ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let rho = Self { mat };
        if d >= TAIL_CHECK_MIN_DIM {
            let tail = rho.tail_mass();
            if tail > TAIL_TOL {
                return Err(Error::Truncation(format!(
                    "tail mass {tail:.3e} in the last five levels exceeds {TAIL_TOL:.0e}"
                )));
            }
        }
        Ok(rho)
    }

    /// Vacuum projector `|0><0|`.
    pub fn vacuum(d: usize) -> Result<Self> {
        Self::fock(d, 0)
    }

    /// Fock projector `|n><n|`.
    pub fn fock(d: usize, n: usize) -> Result<Self> {
        check_dim(d)?;
        if n >= d {
            return Err(Error::InvalidDimension(format!("Fock level {n} outside dimension {d}")));
        }
        let mut mat = Mat::<Complex64>::zeros(d, d);
        mat[(n, n)] = Complex64::ONE;
        Ok(Self { mat })
    }

    /// Coherent-state projector, renormalized on the truncated basis. Errors
    /// if the truncation swallows more than `1e-8` of the state.
    pub fn coherent(d: usize, alpha: Complex64) -> Result<Self> {
        check_dim(d)?;
        let mut c = vec![Complex64::ZERO; d];
        c[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 1..d {
            c[n] = c[n - 1] * alpha / (n as f64).sqrt();
        }
        let norm_sq: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if 1.0 - norm_sq > TAIL_TOL {
            return Err(Error::Truncation(format!(
                "coherent state |alpha| = {:.3} loses {:.3e} of its weight at dimension {d}",
                alpha.norm(),
                1.0 - norm_sq
            )));
        }
        let norm = norm_sq.sqrt();
        let mut mat = Mat::<Complex64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = (c[i] / norm) * (c[j] / norm).conj();
            }
        }
        Ok(Self { mat })
    }

    /// Thermal state with mean occupation `nbar`, renormalized on the
    /// truncated basis; same tail criterion as [`coherent`](Self::coherent).
    pub fn thermal(d: usize, nbar: f64) -> Result<Self> {
        check_dim(d)?;
        if !(nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!("nbar must be nonnegative, got {nbar}")));
        }
        if nbar == 0.0 {
            return Self::vacuum(d);
        }
        let q = nbar / (1.0 + nbar);
        let lost = q.powi(d as i32);
        if lost > TAIL_TOL {
            return Err(Error::Truncation(format!(
                "thermal state nbar = {nbar} loses {lost:.3e} of its weight at dimension {d}"
            )));
        }
        let mut mat = Mat::<Complex64>::zeros(d, d);
        let mut w = 1.0 - q;
        let mut total = 0.0;
        for n in 0..d {
            mat[(n, n)] = Complex64::new(w, 0.0);
            total += w;
            w *= q;
        }
        for n in 0..d {
            mat[(n, n)] /= total;
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<Complex64> {
        self.mat
    }

    pub fn trace(&self) -> Complex64 {
        numerics::trace(self.mat.as_ref())
    }

    /// `tr(op * rho)`.
    pub fn expect(&self, op: &FockOperator) -> Complex64 {
        numerics::expectation(op.as_ref(), self.mat.as_ref())
    }

    /// `<a>` without building the operator.
    pub fn mean_a(&self) -> Complex64 {
        let d = self.dim();
        (1..d)
            .map(|n| (n as f64).sqrt() * self.mat[(n, n - 1)])
            .sum()
    }

    /// `<a^2>` without building the operator.
    pub fn mean_a2(&self) -> Complex64 {
        let d = self.dim();
        (2..d)
            .map(|n| ((n * (n - 1)) as f64).sqrt() * self.mat[(n, n - 2)])
            .sum()
    }

    /// Mean photon number `<a^dag a>`.
    pub fn occupation(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.mat[(n, n)].re).sum()
    }

    /// Population in the last five Fock levels.
    pub fn tail_mass(&self) -> f64 {
        let d = self.dim();
        (d.saturating_sub(5)..d).map(|n| self.mat[(n, n)].re).sum()
    }

    pub fn herm_defect(&self) -> f64 {
        numerics::herm_defect(self.mat.as_ref())
    }

    /// Smallest eigenvalue; slightly negative values signal solver noise,
    /// anything below `-1e-8` a genuine positivity failure.
    pub fn min_eigenvalue(&self) -> f64 {
        numerics::hermitian_eigenvalues(self.mat.as_ref())[0]
    }

    /// Trace distance `||rho - other||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.mat - &other.mat;
        0.5 * numerics::hermitian_eigenvalues(diff.as_ref())
            .iter()
            .map(|x| x.abs())
            .sum::<f64>()
    }

    /// Column-stacked `vec(rho)`.
    pub fn vectorize(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut v = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                v.push(self.mat[(i, j)]);
            }
        }
        v
    }
}
