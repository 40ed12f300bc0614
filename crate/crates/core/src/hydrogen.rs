//! Hydrogen spectrum, the local energy expansion and revival times.
//!
//! Atomic units throughout. Level arguments here are principal quantum
//! numbers (`n >= 1`).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Supremum of `|e_n - T_3(n)| n̄^6 / (n - n̄)^4` over `|n - n̄| <= n̄/4`.
///
/// With `x = (n - n̄)/n̄` the ratio is `(5 + 4x) / (2 (1 + x)^2)`, which is
/// decreasing in `x`; its value at `x = -1/4` is `32/9`. At `x = 0` it is `5/2`.
pub const QUARTIC_REMAINDER_CONSTANT: f64 = 32.0 / 9.0;

fn check_level(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::Domain(
            "principal quantum number must be >= 1".into(),
        ));
    }
    Ok(())
}

/// `e_n = -1/(2n^2)`.
pub fn energy(n: u64) -> Result<f64> {
    check_level(n)?;
    Ok(energy_real(n as f64))
}

/// `-1/(2x^2)` for real `x`.
pub fn energy_real(x: f64) -> f64 {
    -0.5 / (x * x)
}

/// Level degeneracy `n^2`.
pub fn degeneracy(n: u64) -> u64 {
    n * n
}

/// Taylor coefficients of `e_n` about `n = center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyExpansion {
    pub center: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl EnergyExpansion {
    /// Cubic Taylor polynomial at `n`.
    pub fn eval(&self, n: f64) -> f64 {
        let d = n - self.center;
        self.c0 + d * (self.c1 + d * (self.c2 + d * self.c3))
    }
}

pub fn energy_expansion(center: f64) -> Result<EnergyExpansion> {
    if !(center > 0.0 && center.is_finite()) {
        return Err(Error::Domain(format!(
            "expansion center must be positive, got {center}"
        )));
    }
    let c = center;
    Ok(EnergyExpansion {
        center: c,
        c0: -0.5 / (c * c),
        c1: 1.0 / (c * c * c),
        c2: -1.5 / c.powi(4),
        c3: 2.0 / c.powi(5),
    })
}

/// `T_r = (2π/3) <n>^4`.
pub fn revival_time(mean_n: f64) -> Result<f64> {
    if !(mean_n > 0.0 && mean_n.is_finite()) {
        return Err(Error::Domain(format!(
            "mean level must be positive, got {mean_n}"
        )));
    }
    Ok(2.0 * PI / 3.0 * mean_n.powi(4))
}

/// Classical Kepler period `2π n^3`.
pub fn kepler_period(mean_n: f64) -> f64 {
    2.0 * PI * mean_n.powi(3)
}

/// `4π (Δn)^3 / (3 <n>)`; values well below one indicate a clean revival.
pub fn revival_ratio(mean_n: f64, spread_n: f64) -> Result<f64> {
    if !(mean_n > 0.0 && mean_n.is_finite()) || !(spread_n >= 0.0 && spread_n.is_finite()) {
        return Err(Error::Domain(format!(
            "revival ratio needs mean > 0 and spread >= 0, got ({mean_n}, {spread_n})"
        )));
    }
    Ok(4.0 * PI * spread_n.powi(3) / (3.0 * mean_n))
}

/// Tagged snapshot times `0, T_r/5, T_r/4, T_r/3, T_r/2, T_r`.
pub fn fractional_revival_times(revival: f64) -> Result<Vec<(&'static str, f64)>> {
    if !(revival > 0.0 && revival.is_finite()) {
        return Err(Error::Domain(format!(
            "revival time must be positive, got {revival}"
        )));
    }
    Ok(vec![
        ("0", 0.0),
        ("T_r/5", revival / 5.0),
        ("T_r/4", revival / 4.0),
        ("T_r/3", revival / 3.0),
        ("T_r/2", revival / 2.0),
        ("T_r", revival),
    ])
}
