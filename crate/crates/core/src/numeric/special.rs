//! Log-gamma and log-factorial.
//!
//! `ln Γ(x)` is evaluated by the Stirling series after shifting the argument
//! up to `x >= STIRLING_MIN` with the recurrence `Γ(x+1) = x Γ(x)`. With eight
//! Bernoulli terms the truncation error at the shift point is below `1e-20`,
//! so the result is limited only by the rounding of the final additions
//! (a few ulp of `|ln Γ(x)|`, or ~`5e-15` absolute near the zeros at 1 and 2).

use super::dd::DoubleDouble;
use crate::error::{Error, Result};
use std::sync::OnceLock;

const STIRLING_MIN: f64 = 15.0;

/// `0.5 * ln(2π)`
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2k} / (2k (2k-1))` for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Horner in 1/x^2, highest order first.
    let mut series = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series * inv
}

/// Natural log of the gamma function for finite `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "ln_gamma requires a finite positive argument, got {x}"
        )));
    }
    Ok(ln_gamma_unchecked(x))
}

/// `ln_gamma` without argument validation; `x` must be finite and positive.
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= STIRLING_MIN {
        return stirling(x);
    }
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_MIN {
        product *= shifted;
        shifted += 1.0;
    }
    stirling(shifted) - product.ln()
}

const FACTORIAL_TABLE_LEN: usize = 2048;

/// `ln(k!)` for `k < FACTORIAL_TABLE_LEN`, summed in double-double.
fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut acc = DoubleDouble::ZERO;
        let mut out = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        out.push(0.0);
        for k in 1..FACTORIAL_TABLE_LEN {
            acc = acc + DoubleDouble::new((k as f64).ln());
            out.push(acc.to_f64());
        }
        out
    })
}

/// `ln(n!)`, tabulated for small `n`.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < FACTORIAL_TABLE_LEN {
        return factorial_table()[n as usize];
    }
    ln_gamma_unchecked(n as f64 + 1.0)
}

/// `ln C(n, k)` for `k <= n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}
