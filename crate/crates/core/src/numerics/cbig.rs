//! Complex arithmetic over arbitrary-precision binary floats.
//!
//! The generalized hypergeometric sums in `exactness` suffer catastrophic
//! cancellation: individual terms reach `1e40` and beyond while the sum can
//! be many orders smaller, so f64 is hopeless for the parameter range of
//! interest. This wrapper keeps just the handful of operations the series
//! needs on top of `dashu_float::FBig`.

use dashu_float::round::mode::Zero;
use dashu_float::FBig;
use num_complex::Complex64;

/// Binary big float with truncation rounding; precision is per value.
pub type Big = FBig<Zero, 2>;

/// Convert an `f64` (must be finite) to a big float at `bits` precision.
pub fn big_from_f64(x: f64, bits: usize) -> Big {
    assert!(x.is_finite(), "big_from_f64 requires finite input, got {x}");
    Big::try_from(x)
        .expect("finite f64 converts exactly")
        .with_precision(bits)
        .value()
}

/// Complex number with big-float components.
#[derive(Clone, Debug)]
pub struct CBig {
    pub re: Big,
    pub im: Big,
}

impl CBig {
    pub fn new(re: Big, im: Big) -> Self {
        Self { re, im }
    }

    pub fn from_f64(z: Complex64, bits: usize) -> Self {
        Self {
            re: big_from_f64(z.re, bits),
            im: big_from_f64(z.im, bits),
        }
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_f64(Complex64::ZERO, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_f64(Complex64::ONE, bits)
    }

    pub fn add(&self, o: &CBig) -> CBig {
        CBig::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn mul(&self, o: &CBig) -> CBig {
        CBig::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn div(&self, o: &CBig) -> CBig {
        let den = &o.re * &o.re + &o.im * &o.im;
        CBig::new(
            (&self.re * &o.re + &self.im * &o.im) / &den,
            (&self.im * &o.re - &self.re * &o.im) / &den,
        )
    }

    /// Divide by a real big float.
    pub fn div_big(&self, k: &Big) -> CBig {
        CBig::new(&self.re / k, &self.im / k)
    }

    /// `|z|^2` collapsed to f64; `f64::INFINITY` on overflow so magnitude
    /// comparisons stay conservative for huge intermediate terms.
    pub fn mag2_f64(&self) -> f64 {
        let re = self.re.to_f64().value();
        let im = self.im.to_f64().value();
        let m = re * re + im * im;
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    }

    /// Approximate `log2 |z|`, overflow-free: reads the binary exponent of
    /// the components instead of converting the value. Good to +-1 bit,
    /// which is all a precision audit needs. `-inf` for zero.
    pub fn log2_mag(&self) -> f64 {
        fn part(x: &Big) -> f64 {
            let r = x.repr();
            if r.significand().is_zero() {
                f64::NEG_INFINITY
            } else {
                r.exponent() as f64 + r.digits() as f64
            }
        }
        part(&self.re).max(part(&self.im))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }
}
