//! Closed-form steady-state moments of the driven Kerr mode.
//!
//! The moments are ratios of generalized hypergeometric sums whose terms
//! oscillate over dozens of orders of magnitude in the strong-drive regime,
//! so the series run in arbitrary precision with a cancellation audit; only
//! the final ratio is collapsed to f64.

use num_complex::Complex64;

use crate::numerics::cbig::{big_from_f64, CBig};
use crate::operators::ModelParams;
use crate::{Error, Result};

/// Parameters of the closed-form steady state.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolutionParams {
    /// Drive parameter `2 E / (i U)`.
    pub xi: Complex64,
    /// Loss-detuning parameter `2 (i delta + kappa) / (i U)`.
    pub x: Complex64,
}

impl ExactSolutionParams {
    pub fn new(p: &ModelParams) -> Result<Self> {
        if p.u <= 0.0 {
            return Err(Error::InvalidParameter(
                "closed-form moments require a positive interaction".into(),
            ));
        }
        let u_int = p.interaction();
        // 1/i = -i folds the prefactors into explicit components
        let xi = Complex64::new(0.0, -2.0 * p.pump() / u_int);
        let x = Complex64::new(2.0 * p.delta / u_int, -2.0 * p.kappa / u_int);
        Ok(Self { xi, x })
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686903,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma function on the complex plane (Lanczos approximation with
/// reflection for the left half-plane). Accurate to about 13 digits.
pub fn complex_gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::GammaPole(z));
    }
    if z.re < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        let s = (pi * z).sin();
        if s.norm() == 0.0 {
            return Err(Error::GammaPole(z));
        }
        return Ok(pi / (s * complex_gamma(Complex64::ONE - z)?));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    Ok(sqrt_2pi * t.powc(z + 0.5) * (-t).exp() * x)
}

/// Result of a hypergeometric evaluation with its precision audit.
#[derive(Debug, Clone, Copy)]
pub struct HyperValue {
    pub value: Complex64,
    /// Decimal digits trusted after subtracting the cancellation loss.
    pub achieved_digits: f64,
    pub terms: usize,
}

struct BigSeries {
    sum: CBig,
    /// `log10` of the largest term magnitude, tracked incrementally in f64
    /// so no intermediate ever overflows.
    max_log10_term: f64,
    terms: usize,
    converged: bool,
}

/// Sum `0F2(a, b; c) = sum_k c^k / ((a)_k (b)_k k!)` at fixed precision.
fn series_0f2(a: Complex64, b: Complex64, c: Complex64, bits: usize) -> BigSeries {
    const MAX_TERMS: usize = 200_000;
    const LOG10_2: f64 = std::f64::consts::LOG10_2;
    let cb = CBig::from_f64(c, bits);
    let mut term = CBig::one(bits);
    let mut sum = term.clone();
    let c_abs = c.norm();
    let log10_c = c_abs.log10();
    let mut log10_term = 0.0f64;
    let mut max_log10_term = 0.0f64;

    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let ak = CBig::from_f64(a + kf, bits);
        let bk = CBig::from_f64(b + kf, bits);
        let k1 = big_from_f64(kf + 1.0, bits);
        term = term.mul(&cb).div(&ak).div(&bk).div_big(&k1);
        sum = sum.add(&term);

        log10_term +=
            log10_c - (a + kf).norm().log10() - (b + kf).norm().log10() - (kf + 1.0).log10();
        max_log10_term = max_log10_term.max(log10_term);
        // past the term-ratio peak the tail is geometric; once a term is
        // twenty digits below the sum the remainder cannot matter
        let kf3 = (kf + 2.0) * (kf + 2.0) * (kf + 2.0);
        if kf3 > 2.0 * c_abs && log10_term < LOG10_2 * sum.log2_mag() - 20.0 {
            return BigSeries {
                sum,
                max_log10_term,
                terms: k + 1,
                converged: true,
            };
        }
    }
    BigSeries {
        sum,
        max_log10_term,
        terms: MAX_TERMS,
        converged: false,
    }
}

fn bits_for(c_abs: f64) -> usize {
    let digits = 2.5 * c_abs.cbrt() + 30.0;
    (digits * std::f64::consts::LOG2_10).ceil() as usize + 32
}

fn digits_achieved(bits: usize, s: &BigSeries) -> f64 {
    let used = bits as f64 / std::f64::consts::LOG2_10;
    let log10_sum = std::f64::consts::LOG10_2 * s.sum.log2_mag();
    let lost = (s.max_log10_term - log10_sum).max(0.0);
    used - lost
}

/// `0F2(a, b; c)` with automatic precision selection and a retry ladder;
/// errors if even the widest precision cannot certify 16 clean digits.
pub fn hyper0f2(a: Complex64, b: Complex64, c: Complex64) -> Result<HyperValue> {
    let mut bits = bits_for(c.norm());
    for _attempt in 0..4 {
        let s = series_0f2(a, b, c, bits);
        if s.converged {
            let achieved = digits_achieved(bits, &s);
            let value = s.sum.to_c64();
            if achieved >= 16.0 && value.re.is_finite() && value.im.is_finite() {
                return Ok(HyperValue {
                    value,
                    achieved_digits: achieved,
                    terms: s.terms,
                });
            }
            if !value.re.is_finite() || !value.im.is_finite() {
                // the sum itself exceeds f64 range; more precision cannot fix that
                break;
            }
        }
        bits = bits * 3 / 2;
    }
    Err(Error::Precision {
        required_digits: bits as f64 / std::f64::consts::LOG2_10,
        xi2: c.norm(),
    })
}

/// Pochhammer symbol `(z)_k` in f64, safe for the small orders used here.
fn pochhammer(z: Complex64, k: usize) -> Complex64 {
    let mut acc = Complex64::ONE;
    for j in 0..k {
        acc *= z + j as f64;
    }
    acc
}

/// Normalized steady-state moment `<(a^dag)^n a^m>` of the full quantum
/// model, from the closed-form generating-function solution. Both
/// hypergeometric sums share one precision so their ratio benefits from a
/// common cancellation budget.
pub fn exact_moment(n_idx: usize, m_idx: usize, p: &ModelParams) -> Result<Complex64> {
    Ok(exact_moment_detailed(n_idx, m_idx, p)?.0)
}

/// As [`exact_moment`], also returning the trusted decimal digits.
pub fn exact_moment_detailed(n_idx: usize, m_idx: usize, p: &ModelParams) -> Result<(Complex64, f64)> {
    let esp = ExactSolutionParams::new(p)?;
    let xbar = esp.x.conj();
    let xibar = esp.xi.conj();
    // series argument 2|xi|^2; the factor two is pinned by agreement with
    // directly solved steady states (see the oracle-equivalence tests)
    let c = Complex64::new(2.0 * esp.xi.norm_sqr(), 0.0);

    let mut bits = bits_for(c.norm());
    for _attempt in 0..4 {
        let num = series_0f2(xbar + n_idx as f64, esp.x + m_idx as f64, c, bits);
        let den = series_0f2(xbar, esp.x, c, bits);
        if num.converged && den.converged {
            let achieved = digits_achieved(bits, &num).min(digits_achieved(bits, &den));
            if achieved >= 16.0 {
                if den.sum.log2_mag() == f64::NEG_INFINITY {
                    return Err(Error::Precision {
                        required_digits: bits as f64 / std::f64::consts::LOG2_10,
                        xi2: c.norm(),
                    });
                }
                let ratio = num.sum.div(&den.sum).to_c64();
                let prefactor = xibar.powu(n_idx as u32) * esp.xi.powu(m_idx as u32)
                    / (pochhammer(xbar, n_idx) * pochhammer(esp.x, m_idx));
                return Ok((prefactor * ratio, achieved));
            }
        }
        bits = bits * 3 / 2;
    }
    Err(Error::Precision {
        required_digits: bits as f64 / std::f64::consts::LOG2_10,
        xi2: c.norm(),
    })
}
