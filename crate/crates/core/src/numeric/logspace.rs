//! Log-domain magnitudes and log-polar complex numbers.
//!
//! Magnitude chains such as `s^n / sqrt(rho_n)` leave the range of `f64`
//! long before the interesting levels are reached, so they are carried as
//! natural logs and only exponentiated once ratios have cancelled.

use num_complex::Complex64;
use std::ops::{Div, Mul};

/// Natural log of a nonnegative magnitude; `-inf` encodes zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogMagnitude(pub f64);

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude(f64::NEG_INFINITY);
    pub const ONE: LogMagnitude = LogMagnitude(0.0);

    pub fn from_linear(x: f64) -> Self {
        debug_assert!(x >= 0.0);
        LogMagnitude(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `ln(e^a + e^b)`.
    pub fn sum(self, other: Self) -> Self {
        LogMagnitude(log_add_exp(self.0, other.0))
    }

    pub fn powi(self, k: i64) -> Self {
        if k == 0 {
            return LogMagnitude::ONE;
        }
        LogMagnitude(self.0 * k as f64)
    }

    pub fn sqrt(self) -> Self {
        LogMagnitude(0.5 * self.0)
    }
}

impl Mul for LogMagnitude {
    type Output = LogMagnitude;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return LogMagnitude::ZERO;
        }
        LogMagnitude(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LogMagnitude {
    type Output = LogMagnitude;
    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return LogMagnitude::ZERO;
        }
        LogMagnitude(self.0 - rhs.0)
    }
}

/// `ln(e^a + e^b)` without overflow; two `-inf` operands give `-inf`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum_i e^{x_i}`; empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Complex number in log-polar form: `exp(ln_abs) * exp(i arg)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        ln_abs: f64::NEG_INFINITY,
        arg: 0.0,
    };

    pub fn new(ln_abs: f64, arg: f64) -> Self {
        LogComplex { ln_abs, arg }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return LogComplex::ZERO;
        }
        LogComplex {
            ln_abs: z.norm().ln(),
            arg: z.arg(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn norm_sqr(&self) -> f64 {
        (2.0 * self.ln_abs).exp()
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn conj(self) -> Self {
        LogComplex {
            ln_abs: self.ln_abs,
            arg: -self.arg,
        }
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex {
            ln_abs: self.ln_abs + rhs.ln_abs,
            arg: self.arg + rhs.arg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_sum_exp_handles_extreme_scales() {
        let got = log_sum_exp(&[1e4, 1e4]);
        assert!((got - (1e4 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp(&[f64::NEG_INFINITY, 0.0])).abs() < 1e-300);
    }

    #[test]
    fn zero_magnitude_products() {
        let z = LogMagnitude::ZERO;
        assert!((z * LogMagnitude(5.0)).is_zero());
        assert!((z / LogMagnitude(5.0)).is_zero());
        assert_eq!(z.sum(LogMagnitude::ONE), LogMagnitude::ONE);
        assert_eq!(z.powi(0), LogMagnitude::ONE);
    }

    #[test]
    fn log_complex_round_trip() {
        let z = Complex64::new(-3.0, 4.0);
        let back = LogComplex::from_complex(z).to_complex();
        assert!((back - z).norm() < 1e-14);
        assert_eq!(
            LogComplex::from_complex(Complex64::new(0.0, 0.0))
                .to_complex()
                .norm(),
            0.0
        );
    }

    proptest! {
        #[test]
        fn log_add_exp_never_nan(a in -1e300f64..1e300, b in -1e300f64..1e300) {
            let r = log_add_exp(a, b);
            prop_assert!(!r.is_nan());
            prop_assert!(r >= a.max(b));
        }

        #[test]
        fn log_add_exp_matches_linear(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let r = log_add_exp(a, b).exp();
            let want = a.exp() + b.exp();
            prop_assert!((r / want - 1.0).abs() < 1e-13);
        }
    }
}
