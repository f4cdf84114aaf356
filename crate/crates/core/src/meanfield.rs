//! Mean-field (classical) analysis of the driven Kerr mode: steady-state
//! branches, their stability, the bistable window, and the finite-size
//! critical pump located from the steady-state susceptibility.

use num_complex::Complex64;

use crate::operators::ModelParams;
use crate::{exactness, Error, Result};

/// One steady-state branch of the classical flow.
#[derive(Debug, Clone, Copy)]
pub struct MfRoot {
    /// Rescaled occupation `|alpha|^2`.
    pub n: f64,
    /// Rescaled field amplitude.
    pub alpha: Complex64,
    /// Linear stability of the branch.
    pub stable: bool,
}

/// Steady-state branches at one pump value, ascending in `n`.
#[derive(Debug, Clone)]
pub struct MeanFieldResult {
    pub roots: Vec<MfRoot>,
}

/// Boundaries of the bistable pump window and the occupations at which the
/// branches fold. The larger fold occupation belongs to the lower edge.
#[derive(Debug, Clone, Copy)]
pub struct BistabilityEdges {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub n_at_lo: f64,
    pub n_at_hi: f64,
}

/// Classical equation of motion for the rescaled amplitude.
pub fn mf_flow(alpha: Complex64, p: &ModelParams) -> Complex64 {
    let coeff = Complex64::new(p.kappa, p.delta + p.u * alpha.norm_sqr());
    -coeff * alpha + p.epsilon
}

/// Cubic residual whose roots are the steady-state occupations:
/// `n (kappa^2 + (delta + u n)^2) - eps^2`.
fn steady_residual(n: f64, eps: f64, p: &ModelParams) -> f64 {
    let det = p.delta + p.u * n;
    n * (p.kappa * p.kappa + det * det) - eps * eps
}

fn steady_residual_deriv(n: f64, p: &ModelParams) -> f64 {
    let det = p.delta + p.u * n;
    p.kappa * p.kappa + det * det + 2.0 * p.u * n * det
}

fn polish_root(mut n: f64, eps: f64, p: &ModelParams) -> f64 {
    let scale = (eps * eps).max(1.0);
    for _ in 0..8 {
        let f = steady_residual(n, eps, p);
        if f.abs() <= 1e-13 * scale {
            break;
        }
        let df = steady_residual_deriv(n, p);
        if df == 0.0 {
            break;
        }
        let step = f / df;
        n -= step;
        if step.abs() <= 1e-15 * n.abs().max(1.0) {
            break;
        }
    }
    n
}

/// Real nonnegative roots of the steady-state cubic, unpolished.
fn cubic_roots(eps: f64, p: &ModelParams) -> Vec<f64> {
    if p.u == 0.0 {
        // linear cavity: single Lorentzian response
        return vec![eps * eps / (p.kappa * p.kappa + p.delta * p.delta)];
    }
    if eps == 0.0 {
        // undriven: the quadratic factor has no real roots
        return vec![0.0];
    }
    let u2 = p.u * p.u;
    let pc = 2.0 * p.delta / p.u;
    let qc = (p.delta * p.delta + p.kappa * p.kappa) / u2;
    let rc = -eps * eps / u2;
    // depressed cubic t^3 + at + b with n = t - pc/3
    let a = qc - pc * pc / 3.0;
    let b = 2.0 * pc * pc * pc / 27.0 - pc * qc / 3.0 + rc;
    let disc = 0.25 * b * b + a * a * a / 27.0;
    let shift = -pc / 3.0;
    let mut out = Vec::with_capacity(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let t = (-0.5 * b + sq).cbrt() + (-0.5 * b - sq).cbrt();
        out.push(t + shift);
    } else {
        let m = 2.0 * (-a / 3.0).sqrt();
        let cosarg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = cosarg.acos();
        for k in 0..3 {
            let t = m * (theta / 3.0 - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            out.push(t + shift);
        }
    }
    out.retain(|&n| n > -1e-9);
    out
}

/// All steady states of the classical flow at pump `eps`, with stability.
pub fn mf_steady_states(eps: f64, p: &ModelParams) -> MeanFieldResult {
    let mut ns: Vec<f64> = cubic_roots(eps, p)
        .into_iter()
        .map(|n| polish_root(n.max(0.0), eps, p).max(0.0))
        .collect();
    ns.sort_by(|a, b| a.total_cmp(b));
    ns.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));

    let roots = ns
        .into_iter()
        .map(|n| {
            let alpha = Complex64::new(eps, 0.0) / Complex64::new(p.kappa, p.delta + p.u * n);
            // Jacobian of the flow: trace is -2 kappa (always negative), so
            // stability is decided by the determinant alone.
            let det2 = p.delta + 2.0 * p.u * n;
            let det = p.kappa * p.kappa + det2 * det2 - p.u * p.u * n * n;
            MfRoot {
                n,
                alpha,
                stable: det > 0.0,
            }
        })
        .collect();
    MeanFieldResult { roots }
}

/// Pump window with three coexisting branches. Exists only for
/// `delta < -sqrt(3) kappa` with a nonzero interaction.
pub fn bistability_edges(p: &ModelParams) -> Result<BistabilityEdges> {
    if p.u == 0.0 {
        return Err(Error::NoBistability("interaction u is zero".into()));
    }
    let discr = p.delta * p.delta - 3.0 * p.kappa * p.kappa;
    if p.delta >= 0.0 || discr <= 0.0 {
        return Err(Error::NoBistability(format!(
            "requires delta < -sqrt(3) kappa, got delta = {}, kappa = {}",
            p.delta, p.kappa
        )));
    }
    // folds of the S-curve: zeros of d(eps^2)/dn
    let sq = discr.sqrt();
    let n_hi = (-2.0 * p.delta + sq) / (3.0 * p.u);
    let n_lo_fold = (-2.0 * p.delta - sq) / (3.0 * p.u);
    let eps_at = |n: f64| {
        let det = p.delta + p.u * n;
        (n * (p.kappa * p.kappa + det * det)).sqrt()
    };
    Ok(BistabilityEdges {
        eps_lo: eps_at(n_hi),
        eps_hi: eps_at(n_lo_fold),
        n_at_lo: n_hi,
        n_at_hi: n_lo_fold,
    })
}

/// Occupation scale used to size Fock truncations: the upper fold of the
/// S-curve when the parameters are bistable, otherwise the largest steady
/// state at the configured pump.
pub(crate) fn reference_occupation(p: &ModelParams) -> f64 {
    if let Ok(edges) = bistability_edges(p) {
        return edges.n_at_lo;
    }
    mf_steady_states(p.epsilon, p)
        .roots
        .iter()
        .map(|r| r.n)
        .fold(0.0, f64::max)
}

/// Finite-size critical pump at scale `n_scale`: the maximizer of the
/// steady-state susceptibility `d|<a>|/d eps` inside the bistable window,
/// located by golden-section search on the closed-form moments.
pub fn critical_pump(p: &ModelParams, n_scale: f64) -> Result<f64> {
    let edges = bistability_edges(p)?;
    let pm = p.with_n_scale(n_scale)?;
    let fd_step = 1e-3;

    let moment_abs = |eps: f64| -> Result<f64> {
        let pe = pm.with_epsilon(eps)?;
        Ok(exactness::exact_moment(0, 1, &pe)?.norm())
    };
    let susceptibility = |eps: f64| -> Result<f64> {
        Ok((moment_abs(eps + fd_step)? - moment_abs(eps - fd_step)?) / (2.0 * fd_step))
    };

    let lo = edges.eps_lo + 2.0 * fd_step;
    let hi = edges.eps_hi - 2.0 * fd_step;
    if !(lo < hi) {
        return Err(Error::NoBistability("bistable window narrower than the probe step".into()));
    }

    // The susceptibility is not unimodal over the whole window: |<a>| dips
    // just below the jump, so the derivative goes negative there before
    // spiking. Bracket the global maximum on a scan first; golden-section
    // is only trustworthy inside that bracket.
    const SCAN: usize = 128;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=SCAN {
        let eps = lo + (hi - lo) * i as f64 / SCAN as f64;
        let s = susceptibility(eps)?;
        if s > best.1 {
            best = (eps, s);
        }
    }
    let grid_h = (hi - lo) / SCAN as f64;
    let mut a = (best.0 - grid_h).max(lo);
    let mut b = (best.0 + grid_h).min(hi);

    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = susceptibility(c)?;
    let mut fd = susceptibility(d)?;
    while b - a > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = susceptibility(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = susceptibility(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
