//! Matrix exponentials: dense Pade scaling-and-squaring for small matrices
//! and an adaptive Arnoldi approximation of `exp(t A) v` for large sparse
//! generators, in the style of Expokit's `dgexpv`.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::{Error, Result};

/// Theta bounds from Higham's degree-selection table.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn dense_norm_one(a: MatRef<'_, Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = (0..a.nrows()).map(|i| a[(i, j)].norm()).sum();
        worst = worst.max(s);
    }
    worst
}

fn eye(n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::ONE
        } else {
            Complex64::ZERO
        }
    })
}

/// Evaluate the order-`m` diagonal Pade approximant given precomputed even
/// powers of `a`. `powers[k]` holds `a^(2k)` starting from the identity.
fn pade_low(a: MatRef<'_, Complex64>, powers: &[Mat<Complex64>], b: &[f64]) -> Mat<Complex64> {
    let n = a.nrows();
    let mut u_poly = Mat::<Complex64>::zeros(n, n);
    let mut v = Mat::<Complex64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        let bu = Complex64::new(b[2 * k + 1], 0.0);
        let bv = Complex64::new(b[2 * k], 0.0);
        u_poly += faer::Scale(bu) * p;
        v += faer::Scale(bv) * p;
    }
    let u = a * &u_poly;
    solve_pade(&u, &v)
}

fn solve_pade(u: &Mat<Complex64>, v: &Mat<Complex64>) -> Mat<Complex64> {
    let lhs = v - u;
    let rhs = v + u;
    lhs.partial_piv_lu().solve(&rhs)
}

/// `exp(a)` for a dense square matrix.
pub fn expm_dense(a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = dense_norm_one(a);
    let a2 = a * a;
    if norm <= THETA_3 {
        return pade_low(a, &[eye(n), a2], &B_3);
    }
    let a4 = &a2 * &a2;
    if norm <= THETA_5 {
        return pade_low(a, &[eye(n), a2, a4], &B_5);
    }
    let a6 = &a4 * &a2;
    if norm <= THETA_7 {
        return pade_low(a, &[eye(n), a2, a4, a6], &B_7);
    }
    if norm <= THETA_9 {
        let a8 = &a6 * &a2;
        return pade_low(a, &[eye(n), a2, a4, a6, a8], &B_9);
    }

    // degree 13 with scaling and squaring
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scale = Complex64::new(0.5f64.powi(s as i32), 0.0);
    let a = faer::Scale(scale) * a;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B_13;
    let c = |k: usize| Complex64::new(b[k], 0.0);

    let inner_u = faer::Scale(c(13)) * &a6 + faer::Scale(c(11)) * &a4 + faer::Scale(c(9)) * &a2;
    let u_poly = &a6 * &inner_u
        + faer::Scale(c(7)) * &a6
        + faer::Scale(c(5)) * &a4
        + faer::Scale(c(3)) * &a2
        + faer::Scale(c(1)) * &eye(n);
    let u = &a * &u_poly;

    let inner_v = faer::Scale(c(12)) * &a6 + faer::Scale(c(10)) * &a4 + faer::Scale(c(8)) * &a2;
    let v = &a6 * &inner_v
        + faer::Scale(c(6)) * &a6
        + faer::Scale(c(4)) * &a4
        + faer::Scale(c(2)) * &a2
        + faer::Scale(c(0)) * &eye(n);

    let mut f = solve_pade(&u, &v);
    for _ in 0..s {
        f = &f * &f;
    }
    f
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn nrm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Step statistics from a Krylov propagation, surfaced for diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpmStats {
    pub substeps: usize,
    pub rejections: usize,
    pub matvecs: usize,
}

/// Approximate `w = exp(t A) v` for the linear map `apply: x -> A x`.
///
/// Uses a restarted Arnoldi process of dimension at most `KRYLOV_DIM` with
/// the Expokit augmented-Hessenberg error estimate; the substep size adapts
/// so the accumulated local error stays below `tol`.
pub fn expm_multiply<F>(
    apply: F,
    dim: usize,
    v: &[Complex64],
    t: f64,
    tol: f64,
) -> Result<(Vec<Complex64>, ExpmStats)>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    const KRYLOV_DIM: usize = 30;
    const GAMMA: f64 = 0.9;
    const DELTA: f64 = 1.2;
    const MAX_REJECT: usize = 60;

    assert_eq!(v.len(), dim);
    assert!(t.is_finite() && t >= 0.0, "propagation time must be >= 0");
    let mut stats = ExpmStats::default();
    let mut w = v.to_vec();
    if t == 0.0 || nrm2(v) == 0.0 {
        return Ok((w, stats));
    }

    let m = KRYLOV_DIM.min(dim.saturating_sub(1)).max(1);
    let tol_rate = tol.max(1e-14) / t;
    let mut t_done = 0.0f64;
    let mut tau = t;
    let mut scratch = vec![Complex64::ZERO; dim];

    while t_done < t {
        tau = tau.min(t - t_done);
        let beta = nrm2(&w);
        if beta == 0.0 {
            break;
        }

        // Arnoldi with one full reorthogonalization pass
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(w.iter().map(|z| z / beta).collect());
        let mut h = Mat::<Complex64>::zeros(m + 2, m + 2);
        let mut kdim = m;
        let mut happy = false;
        let mut h_scale = 0.0f64;
        for j in 0..m {
            apply(&basis[j], &mut scratch);
            stats.matvecs += 1;
            for _pass in 0..2 {
                for (i, vi) in basis.iter().enumerate() {
                    let c = dot(vi, &scratch);
                    h[(i, j)] += c;
                    for (pk, vk) in scratch.iter_mut().zip(vi) {
                        *pk -= c * vk;
                    }
                }
            }
            for i in 0..=j {
                h_scale = h_scale.max(h[(i, j)].norm());
            }
            let hj = nrm2(&scratch);
            if hj <= 1e-12 * h_scale.max(1e-300) {
                kdim = j + 1;
                happy = true;
                break;
            }
            h[(j + 1, j)] = Complex64::new(hj, 0.0);
            basis.push(scratch.iter().map(|z| z / hj).collect());
        }

        let avnorm = if happy {
            0.0
        } else {
            apply(&basis[m], &mut scratch);
            stats.matvecs += 1;
            nrm2(&scratch)
        };

        // augmented Hessenberg: two extra rows expose the leading and
        // next-order error terms of the Krylov approximation
        let naug = kdim + 2;
        let mut haug = Mat::<Complex64>::zeros(naug, naug);
        for j in 0..kdim {
            for i in 0..(j + 2).min(kdim) {
                haug[(i, j)] = h[(i, j)];
            }
        }
        if !happy {
            haug[(kdim, kdim - 1)] = h[(kdim, kdim - 1)];
            haug[(kdim + 1, kdim)] = Complex64::ONE;
        }

        let mut rejected = 0usize;
        loop {
            let scaled = faer::Scale(Complex64::new(tau, 0.0)) * &haug;
            let f = expm_dense(scaled.as_ref());
            let (err_loc, order) = if happy {
                (0.0, kdim as f64)
            } else {
                let err1 = beta * f[(kdim, 0)].norm();
                let err2 = beta * f[(kdim + 1, 0)].norm() * avnorm;
                if err1 > 10.0 * err2 {
                    (err2, kdim as f64)
                } else if err1 > err2 {
                    (err1 * err2 / (err1 - err2), kdim as f64)
                } else {
                    (err1, (kdim as f64 - 1.0).max(1.0))
                }
            };

            if happy || err_loc <= DELTA * tau * tol_rate {
                let nvec = if happy { kdim } else { kdim + 1 };
                for (k, wk) in w.iter_mut().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for (i, vi) in basis.iter().take(nvec).enumerate() {
                        acc += f[(i, 0)] * vi[k];
                    }
                    *wk = beta * acc;
                }
                t_done += tau;
                stats.substeps += 1;
                if !happy && err_loc > 0.0 {
                    let grow = GAMMA * (tau * tol_rate / err_loc).powf(1.0 / order);
                    tau *= grow.clamp(0.2, 5.0);
                }
                break;
            }

            rejected += 1;
            stats.rejections += 1;
            if rejected > MAX_REJECT {
                return Err(Error::NonConvergence {
                    what: "krylov propagator substep".into(),
                    iterations: rejected,
                    residual: err_loc,
                });
            }
            let shrink = GAMMA * (tau * tol_rate / err_loc).powf(1.0 / order);
            tau *= shrink.clamp(0.1, 0.9);
            if tau < 1e-12 * t {
                return Err(Error::Stiffness { tau });
            }
        }
    }

    Ok((w, stats))
}
