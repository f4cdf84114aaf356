//! Vectorized Liouvillian of the lossy driven Kerr mode: sparse assembly,
//! steady states, and the slow end of the decay spectrum.
//!
//! With `vec(rho)` stacking columns, the generator acts as a sparse
//! `d^2 x d^2` matrix built from Kronecker products of the Hamiltonian and
//! the jump operator. All conventions here match
//! [`DensityMatrix::vectorize`](crate::operators::DensityMatrix::vectorize).

use faer::sparse::SparseColMat;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::numerics::eigs::{self, EigenPair};
use crate::numerics::sparse::{norm_one, spmv, TripletBuffer};
use crate::operators::{build_hamiltonian, DensityMatrix, ModelParams};
use crate::{numerics, Error, Result};

/// Sparse superoperator on column-stacked density matrices.
pub struct Superoperator {
    mat: SparseColMat<usize, Complex64>,
    dim: usize,
    params: ModelParams,
}

impl Superoperator {
    /// Fock dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension `d^2` of the vectorized space.
    pub fn vec_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn matrix(&self) -> &SparseColMat<usize, Complex64> {
        &self.mat
    }

    /// Induced 1-norm, used for step-size heuristics.
    pub fn norm_one(&self) -> f64 {
        norm_one(&self.mat)
    }

    /// `y = L x` on vectorized states.
    pub fn apply_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        spmv(&self.mat, x, y);
    }

    /// `L(rho)` as a matrix, for residual checks and small-scale work.
    pub fn apply(&self, rho: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let x = vec_mat(rho);
        let mut y = vec![Complex64::ZERO; x.len()];
        self.apply_vec(&x, &mut y);
        unvec(self.dim, &y)
    }

    /// Wrap an externally built superoperator matrix. Intended for tests
    /// that need generators outside the Kerr family.
    #[doc(hidden)]
    pub fn from_parts(
        mat: SparseColMat<usize, Complex64>,
        dim: usize,
        params: ModelParams,
    ) -> Self {
        assert_eq!(mat.nrows(), dim * dim);
        assert_eq!(mat.ncols(), dim * dim);
        Self { mat, dim, params }
    }
}

/// Column-stack a dense matrix.
pub(crate) fn vec_mat(m: MatRef<'_, Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_mat`].
pub fn unvec(d: usize, v: &[Complex64]) -> Mat<Complex64> {
    assert_eq!(v.len(), d * d);
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

/// Assemble the generator: commutator with the Kerr Hamiltonian plus the
/// single-photon loss dissipator at rate `2 kappa`.
pub fn build_liouvillian(p: &ModelParams, d: usize) -> Result<Superoperator> {
    let h = build_hamiltonian(p, d)?;
    let kappa = p.kappa;
    let mut buf = TripletBuffer::new(d * d, d * d);

    let mut h_entries: Vec<(usize, usize, Complex64)> = Vec::new();
    for c in 0..d {
        for r in 0..d {
            let v = h[(r, c)];
            if v != Complex64::ZERO {
                h_entries.push((r, c, v));
            }
        }
    }

    let mi = Complex64::new(0.0, -1.0);
    let pi = Complex64::new(0.0, 1.0);
    for &(r, c, v) in &h_entries {
        for j in 0..d {
            // -i H rho
            buf.push(r + j * d, c + j * d, mi * v);
            // +i rho H
            buf.push(j + c * d, j + r * d, pi * v);
        }
    }

    // dissipator: 2 kappa a rho a^dag - kappa {a^dag a, rho}
    for j in 0..d {
        for i in 0..d {
            let damp = -kappa * (i + j) as f64;
            buf.push(i + j * d, i + j * d, Complex64::new(damp, 0.0));
        }
    }
    for j in 0..d.saturating_sub(1) {
        for i in 0..d.saturating_sub(1) {
            let gain = 2.0 * kappa * (((i + 1) * (j + 1)) as f64).sqrt();
            buf.push(i + j * d, (i + 1) + (j + 1) * d, Complex64::new(gain, 0.0));
        }
    }

    Ok(Superoperator {
        mat: buf.build(),
        dim: d,
        params: *p,
    })
}

/// Steady state plus solver diagnostics.
#[derive(Debug)]
pub struct NessResult {
    pub rho: DensityMatrix,
    /// `max |L(rho)|` of the returned state.
    pub residual: f64,
    /// `|Re|` of the second-slowest mode seen by the solver; crude but
    /// useful to spot metastability without a full spectrum call.
    pub gap_estimate: f64,
}

/// Shift used to make the singular generator factorizable.
const NESS_SHIFT: f64 = 1e-8;
/// Below this splitting two near-zero eigenvalues are treated as a
/// degenerate kernel rather than a steady state plus a slow mode.
const DEGENERACY_TOL: f64 = 1e-12;

pub(crate) fn clip_to_state(mut mat: Mat<Complex64>, clip_floor: Option<f64>) -> Result<DensityMatrix> {
    numerics::hermitize(&mut mat);
    let tr = numerics::trace(mat.as_ref());
    if tr.norm() < 1e-12 {
        return Err(Error::InvalidState(
            "stationary vector has vanishing trace".into(),
        ));
    }
    let scale = Complex64::new(1.0, 0.0) / tr;
    let mat = faer::Scale(scale) * &mat;
    let evd = mat
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::InvalidState(format!("eigendecomposition failed: {e:?}")))?;
    let d = mat.nrows();
    let s = evd.S().column_vector();
    let mut lam: Vec<f64> = (0..d).map(|i| s[i].re).collect();
    if let Some(floor) = clip_floor {
        if lam[0] < floor {
            return Err(Error::InvalidState(format!(
                "steady state has eigenvalue {:.3e}, below the solver-noise floor {floor:.0e}",
                lam[0]
            )));
        }
    }
    for l in lam.iter_mut() {
        *l = l.max(0.0);
    }
    let total: f64 = lam.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("state clipped to zero".into()));
    }
    let u = evd.U();
    let weighted = Mat::from_fn(d, d, |i, j| u[(i, j)] * (lam[j] / total));
    let rho = &weighted * u.adjoint();
    DensityMatrix::from_matrix(rho)
}

/// Steady state of the generator by shift-invert iteration around zero,
/// started from the maximally mixed direction (whose expansion coefficient
/// on the steady state is exactly its trace).
pub fn solve_ness(l: &Superoperator) -> Result<NessResult> {
    let d = l.dim();
    let n = l.vec_dim();
    let mut v0 = faer::Col::<Complex64>::zeros(n);
    let root = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v0[i + i * d] = Complex64::new(root, 0.0);
    }
    let sigma = Complex64::new(NESS_SHIFT, 0.0);
    let k = 2.min(n);
    let mut pairs = eigs::shift_invert_pairs_from(l.matrix(), sigma, k, 1e-12, v0.as_ref())?;
    if pairs.is_empty() {
        return Err(Error::NonConvergence {
            what: "steady-state shift-invert iteration".into(),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    if pairs.len() < 2 && d >= 2 {
        // A single returned pair usually means the Krylov space collapsed
        // because the start vector sits inside an invariant subspace (pure
        // dephasing fixes every diagonal state, for instance). Probe from a
        // traceless start before trusting that the kernel is simple.
        let mut w0 = faer::Col::<Complex64>::zeros(n);
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        w0[0] = s;
        w0[d + 1] = -s;
        if let Ok(probe) = eigs::shift_invert_pairs_from(l.matrix(), sigma, 1, 1e-12, w0.as_ref())
        {
            for p in probe {
                let overlap: Complex64 = pairs[0]
                    .vector
                    .iter()
                    .zip(&p.vector)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                if p.value.norm() < DEGENERACY_TOL && overlap.norm() < 0.99 {
                    pairs.push(p);
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.value.norm().total_cmp(&b.value.norm()));

    if pairs.len() >= 2 && pairs[1].value.norm() < DEGENERACY_TOL {
        let splitting = (pairs[1].value - pairs[0].value).norm();
        let first = clip_to_state(unvec(d, &pairs[0].vector), None)?;
        let second = clip_to_state(unvec(d, &pairs[1].vector), None)?;
        return Err(Error::NearDegenerate {
            splitting,
            candidates: Box::new((first, second)),
        });
    }

    let rho = clip_to_state(unvec(d, &pairs[0].vector), Some(-1e-8))?;
    let residual = {
        let lr = l.apply(rho.matrix().as_ref());
        lr.norm_max()
    };
    if residual > 1e-10 {
        return Err(Error::NonConvergence {
            what: "steady-state residual".into(),
            iterations: pairs.len(),
            residual,
        });
    }
    let gap_estimate = pairs
        .get(1)
        .map(|p| p.value.re.abs())
        .unwrap_or(f64::INFINITY);
    Ok(NessResult {
        rho,
        residual,
        gap_estimate,
    })
}

/// Slow decay spectrum of the generator.
#[derive(Debug)]
pub struct SpectrumResult {
    /// Eigenvalues ordered by `|Re|` ascending (stationary first).
    pub eigenvalues: Vec<Complex64>,
    /// `|Re|` of the slowest nonstationary mode.
    pub gap: f64,
    /// Vectorized eigenmatrices, Frobenius-normalized with a deterministic
    /// phase, aligned with `eigenvalues`.
    pub eigenmatrices: Vec<Mat<Complex64>>,
    /// 2-norm residuals `||L x - z x||`, aligned with `eigenvalues`.
    pub residuals: Vec<f64>,
}

/// Time horizon of the exponential transform used to order eigenvalues by
/// real part; one unit of the (dimensionless) decay time.
const SPECTRUM_TAU: f64 = 1.0;

/// The `k` slowest Liouvillian eigenvalues.
///
/// Eigenvalues ordered by decay rate come from Krylov iteration on the
/// propagator `exp(tau L)`: the transform is monotone in `Re z`, so strongly
/// oscillatory coherences cannot shadow slower modes the way they do under
/// plain shift-invert around the origin. Each Ritz pair is then polished by
/// inverse iteration against `L` itself.
pub fn spectrum(l: &Superoperator, k: usize) -> Result<SpectrumResult> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "spectrum needs at least two eigenvalues (stationary mode plus gap)".into(),
        ));
    }
    let n = l.vec_dim();
    let ask = (k + 4).min(n);
    let raw = eigs::rightmost_pairs(l.matrix(), ask, SPECTRUM_TAU)?;

    let mut polished: Vec<EigenPair> = Vec::with_capacity(raw.len());
    for pair in &raw {
        polished.push(eigs::polish_pair(l.matrix(), pair, 1e-9, 6)?);
    }
    polished.sort_by(|a, b| a.residual.total_cmp(&b.residual));

    // two Ritz values may have converged to the same eigenpair; a genuine
    // degeneracy has orthogonal vectors, a duplicate a parallel one
    let mut kept: Vec<EigenPair> = Vec::new();
    for pair in polished {
        let dup = kept.iter().any(|q| {
            (q.value - pair.value).norm() < 1e-10
                && overlap(&q.vector, &pair.vector).norm() > 0.99
        });
        if !dup {
            kept.push(pair);
        }
    }
    kept.retain(|p| p.residual <= 1e-7);
    if kept.len() < k {
        let worst = kept.iter().map(|p| p.residual).fold(0.0, f64::max);
        return Err(Error::NonConvergence {
            what: "liouvillian spectrum".into(),
            iterations: ask,
            residual: worst,
        });
    }

    kept.sort_by(|a, b| {
        (a.value.re.abs(), -a.value.im).partial_cmp(&(b.value.re.abs(), -b.value.im)).unwrap()
    });
    kept.truncate(k);

    let stationary = kept
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.value.norm().total_cmp(&b.value.norm()))
        .map(|(i, _)| i)
        .unwrap();
    let gap = kept
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != stationary)
        .map(|(_, p)| p.value.re.abs())
        .fold(f64::INFINITY, f64::min);

    let d = l.dim();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenmatrices = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for p in kept {
        eigenvalues.push(p.value);
        residuals.push(p.residual);
        eigenmatrices.push(phase_normalize(unvec(d, &p.vector)));
    }
    Ok(SpectrumResult {
        eigenvalues,
        gap,
        eigenmatrices,
        residuals,
    })
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Scale to unit Frobenius norm and rotate the global phase so the largest
/// entry is real positive, making eigenmatrices reproducible.
fn phase_normalize(mut m: Mat<Complex64>) -> Mat<Complex64> {
    let norm = m.norm_l2();
    if norm == 0.0 {
        return m;
    }
    let d = m.nrows();
    let mut big = Complex64::ZERO;
    for j in 0..d {
        for i in 0..d {
            if m[(i, j)].norm() > big.norm() {
                big = m[(i, j)];
            }
        }
    }
    let phase = if big.norm() > 0.0 {
        big / big.norm()
    } else {
        Complex64::ONE
    };
    let scale = (Complex64::ONE / phase) / norm;
    for j in 0..d {
        for i in 0..d {
            m[(i, j)] *= scale;
        }
    }
    m
}
