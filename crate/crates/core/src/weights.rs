//! Weight functions `rho(u)`, their moments, the normalization `N(s^2)` and
//! the companion density `k(u) = rho(u) / N^2(u)`.
//!
//! Everything here works on logs. The squared level weight of summation
//! index `n` is `s^{2n} d_n / rho_n`; its log is called a *log term* below.

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, special::ln_gamma_unchecked};

/// Hard cap on the summation index reached by any truncation scan.
pub const MAX_LEVEL_INDEX: u64 = 1_000_000;

/// Default tail mass dropped by truncation.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Extra factor applied to the tail bound before a scan may stop.
const SCAN_SAFETY: f64 = 1e-3;

/// A weight-function family `rho(u)`, `u >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// `rho(u) = e^{-u}`, moments `n!`.
    Exponential,
    /// `rho(u) = exp(-u^alpha)`, moments `Γ((n+1)/alpha) / alpha`.
    StretchedExponential { alpha: f64 },
    /// Externally computed `ln rho_n`, `n = 0..len`.
    Tabulated { log_moments: Vec<f64> },
}

impl WeightSpec {
    pub fn stretched(alpha: f64) -> Result<Self> {
        let spec = WeightSpec::StretchedExponential { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tabulated(log_moments: Vec<f64>) -> Result<Self> {
        let spec = WeightSpec::Tabulated { log_moments };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Exponential => Ok(()),
            WeightSpec::StretchedExponential { alpha } => {
                if alpha.is_finite() && *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "stretched exponential needs alpha > 0, got {alpha}"
                    )))
                }
            }
            WeightSpec::Tabulated { log_moments } => {
                if log_moments.is_empty() {
                    return Err(Error::Domain("empty moment table".into()));
                }
                if let Some(bad) = log_moments.iter().position(|m| !m.is_finite()) {
                    return Err(Error::Domain(format!(
                        "non-finite log-moment at index {bad}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Exponent of the stretched family; the plain exponential is `alpha = 1`.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            WeightSpec::Exponential => Some(1.0),
            WeightSpec::StretchedExponential { alpha } => Some(*alpha),
            WeightSpec::Tabulated { .. } => None,
        }
    }

    pub fn log_moment(&self, n: u64) -> Result<f64> {
        log_moment(self, n)
    }

    /// `ln rho(u)`.
    pub fn log_density(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!(
                "density argument must be >= 0, got {u}"
            )));
        }
        match self {
            WeightSpec::Exponential => Ok(-u),
            WeightSpec::StretchedExponential { alpha } => Ok(-u.powf(*alpha)),
            WeightSpec::Tabulated { .. } => Err(Error::DensityUnavailable(
                "tabulated weights carry moments only".into(),
            )),
        }
    }
}

/// `ln rho_n = ln ∫ u^n rho(u) du`.
pub fn log_moment(spec: &WeightSpec, n: u64) -> Result<f64> {
    match spec {
        WeightSpec::Exponential => Ok(ln_gamma_unchecked(n as f64 + 1.0)),
        WeightSpec::StretchedExponential { alpha } => {
            spec.validate()?;
            let arg = (n as f64 + 1.0) / alpha;
            if !arg.is_finite() {
                return Err(Error::Numerical(format!(
                    "log-gamma argument (n+1)/alpha = {arg} is not finite"
                )));
            }
            Ok(ln_gamma_unchecked(arg) - alpha.ln())
        }
        WeightSpec::Tabulated { log_moments } => {
            log_moments
                .get(n as usize)
                .copied()
                .ok_or(Error::OutOfTable {
                    index: n,
                    len: log_moments.len(),
                })
        }
    }
}

/// Degeneracy `d_n` of summation index `n`.
#[derive(Clone, Copy, Debug)]
pub enum Degeneracy {
    /// `d_n = 1`.
    Unit,
    /// Hydrogen: index `n` is principal level `n + 1`, so `d_n = (n+1)^2`.
    Hydrogen,
    Custom(fn(u64) -> u64),
}

impl Degeneracy {
    pub fn value(&self, n: u64) -> u64 {
        match self {
            Degeneracy::Unit => 1,
            Degeneracy::Hydrogen => (n + 1) * (n + 1),
            Degeneracy::Custom(f) => f(n),
        }
    }

    pub fn ln(&self, n: u64) -> f64 {
        match self {
            Degeneracy::Unit => 0.0,
            Degeneracy::Hydrogen => 2.0 * (n as f64 + 1.0).ln(),
            Degeneracy::Custom(f) => (f(n) as f64).ln(),
        }
    }
}

/// `ln(s^{2n} d_n / rho_n)`, with `0^0 = 1`.
pub fn log_term(spec: &WeightSpec, ln_s: f64, degeneracy: Degeneracy, n: u64) -> Result<f64> {
    let power = if n == 0 { 0.0 } else { 2.0 * n as f64 * ln_s };
    Ok(power + degeneracy.ln(n) - log_moment(spec, n)?)
}

fn check_ln_s(ln_s: f64) -> Result<()> {
    if ln_s.is_nan() || ln_s == f64::INFINITY {
        return Err(Error::Domain(format!("invalid ln s = {ln_s}")));
    }
    Ok(())
}

fn ln_of_s(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be finite and >= 0, got {s}")));
    }
    Ok(s.ln())
}

/// `ln N(s^2) = -1/2 ln sum_{n<=n_max} s^{2n} d_n / rho_n`.
pub fn log_norm_factor(
    spec: &WeightSpec,
    s: f64,
    degeneracy: Degeneracy,
    n_max: u64,
) -> Result<f64> {
    log_norm_factor_ln_s(spec, ln_of_s(s)?, degeneracy, n_max)
}

/// As [`log_norm_factor`], parameterized by `ln s` (`-inf` for `s = 0`).
pub fn log_norm_factor_ln_s(
    spec: &WeightSpec,
    ln_s: f64,
    degeneracy: Degeneracy,
    n_max: u64,
) -> Result<f64> {
    check_ln_s(ln_s)?;
    let terms = (0..=n_max)
        .map(|n| log_term(spec, ln_s, degeneracy, n))
        .collect::<Result<Vec<_>>>()?;
    let total = log_sum_exp(&terms);
    if !total.is_finite() {
        return Err(Error::Divergent(format!(
            "normalization sum is not finite (ln sum = {total})"
        )));
    }
    Ok(-0.5 * total)
}

/// Closed-form hydrogen normalization `e^{-s^2/2} (1 + 3 s^2 + s^4)^{-1/2}`.
pub fn hydrogen_norm_closed_form(s: f64) -> f64 {
    hydrogen_log_norm_closed_form(s).exp()
}

/// `ln` of [`hydrogen_norm_closed_form`], safe for any finite `s`.
pub fn hydrogen_log_norm_closed_form(s: f64) -> f64 {
    let s2 = s * s;
    let ln_poly = if s <= 1.0 {
        (3.0 * s2 + s2 * s2).ln_1p()
    } else {
        let inv = 1.0 / s2;
        4.0 * s.ln() + (3.0 * inv + inv * inv).ln_1p()
    };
    -0.5 * s2 - 0.5 * ln_poly
}

/// `k(u) = rho(u) / N^2(u)` given `ln N^2(u)`.
pub fn companion_density(spec: &WeightSpec, norm_sq_log: f64, u: f64) -> Result<f64> {
    if norm_sq_log == f64::NEG_INFINITY || norm_sq_log.is_nan() {
        return Err(Error::Domain("N^2(u) vanishes".into()));
    }
    let ln_rho = spec.log_density(u)?;
    if ln_rho == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((ln_rho - norm_sq_log).exp())
}

/// `k(u)` with `N^2(u)` evaluated from the truncated series.
pub fn companion_density_at(
    spec: &WeightSpec,
    degeneracy: Degeneracy,
    u: f64,
    tail_eps: f64,
) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("u must be >= 0, got {u}")));
    }
    let ln_s = 0.5 * u.ln();
    let scan = scan_terms(spec, ln_s, degeneracy, tail_eps)?;
    let norm_sq_log = -scan.log_total();
    companion_density(spec, norm_sq_log, u)
}

/// Log terms `0..=last` plus a bound on the log of everything beyond.
#[derive(Clone, Debug)]
pub struct TermScan {
    pub terms: Vec<f64>,
    pub ln_tail_bound: f64,
}

impl TermScan {
    /// `ln` of the full series estimate (scanned terms plus tail bound).
    pub fn log_total(&self) -> f64 {
        log_add_exp(log_sum_exp(&self.terms), self.ln_tail_bound)
    }
}

/// Summation-index window `[n_min, n_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub n_min: u64,
    pub n_max: u64,
}

fn second_differences_nonpositive(terms: &[f64]) -> bool {
    terms
        .windows(3)
        .filter(|w| w.iter().all(|x| x.is_finite()))
        .all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-9 * (w[1].abs() + 1.0))
}

/// Scan log terms upward until the remainder is provably below
/// `tail_eps * SCAN_SAFETY` of the running total.
///
/// The tail bound `e^{w_n} r / (1 - r)` with `r = e^{w_n - w_{n-1}}` needs
/// the terms to be log-concave past the peak. That holds for the built-in
/// families; when the scanned terms are not log-concave the scan continues
/// over a fixed margin and restarts if anything there is still significant.
pub fn scan_terms(
    spec: &WeightSpec,
    ln_s: f64,
    degeneracy: Degeneracy,
    tail_eps: f64,
) -> Result<TermScan> {
    spec.validate()?;
    check_ln_s(ln_s)?;
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::Domain(format!(
            "tail_eps must lie in (0, 1), got {tail_eps}"
        )));
    }
    if ln_s == f64::NEG_INFINITY {
        return Ok(TermScan {
            terms: vec![log_term(spec, ln_s, degeneracy, 0)?],
            ln_tail_bound: f64::NEG_INFINITY,
        });
    }
    let ln_cut = tail_eps.ln() + SCAN_SAFETY.ln();
    let table_len = match spec {
        WeightSpec::Tabulated { log_moments } => Some(log_moments.len() as u64),
        _ => None,
    };

    let mut terms: Vec<f64> = Vec::new();
    let mut running = f64::NEG_INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut argmax = 0u64;
    let mut n = 0u64;
    loop {
        if n > MAX_LEVEL_INDEX {
            return Err(Error::Divergent(format!(
                "no truncation below the cap of {MAX_LEVEL_INDEX} levels"
            )));
        }
        if let Some(len) = table_len {
            if n >= len {
                return Err(Error::Divergent(format!(
                    "moment table (length {len}) exhausted before the series converged"
                )));
            }
        }
        let w = log_term(spec, ln_s, degeneracy, n)?;
        if w.is_nan() || w == f64::INFINITY {
            return Err(Error::Divergent(format!("log term {n} is {w}")));
        }
        terms.push(w);
        running = log_add_exp(running, w);
        if w > max {
            max = w;
            argmax = n;
        }
        if n > argmax {
            let ln_ratio = w - terms[n as usize - 1];
            if ln_ratio < 0.0 {
                // ln(r / (1 - r)) = -ln(e^{-ln r} - 1)
                let ln_tail = w - (-ln_ratio).exp_m1().ln();
                if ln_tail < running + ln_cut {
                    // The analytic families are log-concave; tables carry no
                    // such guarantee, so they always get the margin scan.
                    if table_len.is_none()
                        && second_differences_nonpositive(&terms[argmax as usize..])
                    {
                        return Ok(TermScan {
                            terms,
                            ln_tail_bound: ln_tail,
                        });
                    }
                    // Margin scan for non-concave sequences.
                    let margin = 64.max(n / 4);
                    let mut significant = false;
                    let mut extra = Vec::new();
                    for k in (n + 1)..=(n + margin) {
                        if table_len.is_some_and(|len| k >= len) {
                            break;
                        }
                        let wk = log_term(spec, ln_s, degeneracy, k)?;
                        extra.push(wk);
                        if wk > running + ln_cut {
                            significant = true;
                        }
                    }
                    if !significant {
                        let ln_tail = log_sum_exp(&extra);
                        return Ok(TermScan {
                            terms,
                            ln_tail_bound: ln_tail,
                        });
                    }
                }
            }
        }
        n += 1;
    }
}

/// Smallest `n_max` whose dropped upper tail is below `tail_eps` of the total.
pub fn truncation_level(
    spec: &WeightSpec,
    s: f64,
    degeneracy: Degeneracy,
    tail_eps: f64,
) -> Result<u64> {
    let scan = scan_terms(spec, ln_of_s(s)?, degeneracy, tail_eps)?;
    Ok(window_from_scan(&scan, 0.0, tail_eps).n_max)
}

/// Window dropping at most `tail_eps / 2` of the weight on each side.
pub fn truncation_window(
    spec: &WeightSpec,
    ln_s: f64,
    degeneracy: Degeneracy,
    tail_eps: f64,
) -> Result<(Window, TermScan)> {
    let scan = scan_terms(spec, ln_s, degeneracy, tail_eps)?;
    let w = window_from_scan(&scan, 0.5 * tail_eps, 0.5 * tail_eps);
    Ok((w, scan))
}

fn window_from_scan(scan: &TermScan, lower_eps: f64, upper_eps: f64) -> Window {
    let terms = &scan.terms;
    let len = terms.len();
    let total = scan.log_total();

    // suffix[i] = ln(sum_{k>i} e^{w_k} + tail)
    let mut n_max = len - 1;
    let mut suffix = scan.ln_tail_bound;
    let upper_cut = total + upper_eps.ln();
    for i in (0..len).rev() {
        if suffix >= upper_cut {
            break;
        }
        n_max = i;
        suffix = log_add_exp(suffix, terms[i]);
    }

    let mut n_min = 0;
    if lower_eps > 0.0 {
        let lower_cut = total + lower_eps.ln();
        let mut prefix = f64::NEG_INFINITY;
        for (i, &w) in terms.iter().enumerate().take(n_max + 1) {
            let next = log_add_exp(prefix, w);
            if next >= lower_cut {
                break;
            }
            prefix = next;
            n_min = i + 1;
        }
    }
    Window {
        n_min: n_min as u64,
        n_max: n_max as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quadrature::adaptive_semi_infinite;

    #[test]
    fn exponential_moments_are_factorials() {
        let got = log_moment(&WeightSpec::Exponential, 5).unwrap();
        assert!((got - 120f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn alpha_one_matches_exponential() {
        let one = WeightSpec::stretched(1.0).unwrap();
        assert!((log_moment(&one, 7).unwrap() - 5040f64.ln()).abs() < 1e-12);
        for n in 0..=200 {
            let a = log_moment(&one, n).unwrap();
            let b = log_moment(&WeightSpec::Exponential, n).unwrap();
            assert!((a - b).abs() <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn half_alpha_zeroth_moment_is_two() {
        let half = WeightSpec::stretched(0.5).unwrap();
        let got = log_moment(&half, 0).unwrap();
        assert!((got - 2f64.ln()).abs() < 1e-14);
        // ∫ exp(-sqrt(u)) du
        let quad = adaptive_semi_infinite(|u| (-u.sqrt()).exp(), 0.0, 4.0, 1e-14, 1e-13).unwrap();
        assert!((quad - 2.0).abs() < 1e-10);
    }

    #[test]
    fn moments_match_adaptive_quadrature() {
        for alpha in [0.5, 1.0, 2.0] {
            let spec = WeightSpec::stretched(alpha).unwrap();
            for n in 0..=20u64 {
                let want = log_moment(&spec, n).unwrap();
                // Integrate u^n e^{-u^alpha} scaled by its peak to keep it O(1).
                let peak = (n as f64 / alpha).powf(1.0 / alpha).max(1.0);
                let ln_peak_val = n as f64 * peak.ln() - peak.powf(alpha);
                let quad = adaptive_semi_infinite(
                    |u| {
                        if u == 0.0 {
                            return if n == 0 { (-ln_peak_val).exp() } else { 0.0 };
                        }
                        (n as f64 * u.ln() - u.powf(alpha) - ln_peak_val).exp()
                    },
                    0.0,
                    peak,
                    0.0,
                    1e-11,
                )
                .unwrap();
                let got = quad.ln() + ln_peak_val;
                assert!(
                    ((got - want).exp() - 1.0).abs() < 1e-8,
                    "alpha={alpha} n={n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn scaling_map_identity() {
        // ln rho_n(alpha) = ln(1/alpha) + [alpha=1 expression with n+1 -> (n+1)/alpha]
        let exp = WeightSpec::Exponential;
        for (i, alpha) in [0.03125, 0.1, 0.5, 2.0].into_iter().enumerate() {
            let spec = WeightSpec::stretched(alpha).unwrap();
            for n in [0u64, 3, 11, 40, 160] {
                let mapped_arg = (n as f64 + 1.0) / alpha;
                let unit_expr = ln_gamma_unchecked(mapped_arg);
                let got = log_moment(&spec, n).unwrap();
                assert!(
                    (got - ((1.0 / alpha).ln() + unit_expr)).abs() < 1e-12,
                    "i={i} n={n}"
                );
                if alpha == 1.0 {
                    assert_eq!(got, log_moment(&exp, n).unwrap());
                }
            }
        }
    }

    #[test]
    fn tabulated_moments() {
        let spec = WeightSpec::tabulated(vec![0.0, 0.5, 1.5]).unwrap();
        assert_eq!(log_moment(&spec, 1).unwrap(), 0.5);
        assert!(matches!(
            log_moment(&spec, 3),
            Err(Error::OutOfTable { index: 3, len: 3 })
        ));
        assert!(WeightSpec::tabulated(vec![]).is_err());
        assert!(WeightSpec::tabulated(vec![0.0, f64::NAN]).is_err());
        assert!(WeightSpec::stretched(0.0).is_err());
        assert!(WeightSpec::stretched(-1.0).is_err());
    }

    #[test]
    fn norm_factor_at_unit_s() {
        let n_max =
            truncation_level(&WeightSpec::Exponential, 1.0, Degeneracy::Hydrogen, 1e-16).unwrap();
        let got =
            log_norm_factor(&WeightSpec::Exponential, 1.0, Degeneracy::Hydrogen, n_max).unwrap();
        assert!((got + 0.5 * (1.0 + 5f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn norm_factor_at_zero_s() {
        // Only the n = 0 term survives: N^2 d_0 / rho_0 = 1.
        let got = log_norm_factor(&WeightSpec::Exponential, 0.0, Degeneracy::Hydrogen, 30).unwrap();
        assert!(got.abs() < 1e-14);
        let half = WeightSpec::stretched(0.5).unwrap();
        let got = log_norm_factor(&half, 0.0, Degeneracy::Hydrogen, 30).unwrap();
        assert!((got - 0.5 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(hydrogen_norm_closed_form(0.0), 1.0);
        let want = (-0.5f64).exp() / 5f64.sqrt();
        assert!((hydrogen_norm_closed_form(1.0) - want).abs() < 1e-16);
        assert!((hydrogen_norm_closed_form(1.0) - 0.271).abs() < 1e-3);
        let want = (-1f64).exp() / 11f64.sqrt();
        assert!((hydrogen_norm_closed_form(2f64.sqrt()) / want - 1.0).abs() < 1e-14);
        // Large s stays finite in log form.
        assert!(hydrogen_log_norm_closed_form(1e80).is_finite());
    }

    #[test]
    fn closed_form_matches_series_on_grid() {
        for i in 0..100 {
            let s = 10.0 * i as f64 / 99.0;
            let n_max =
                truncation_level(&WeightSpec::Exponential, s, Degeneracy::Hydrogen, 1e-17).unwrap();
            let series =
                log_norm_factor(&WeightSpec::Exponential, s, Degeneracy::Hydrogen, n_max).unwrap();
            let closed = hydrogen_log_norm_closed_form(s);
            assert!(((series - closed).exp() - 1.0).abs() <= 1e-12, "s={s}");
        }
    }

    #[test]
    fn hydrogen_companion_density() {
        let spec = WeightSpec::Exponential;
        for (u, want) in [(0.0, 1.0), (2.0, 11.0)] {
            let k = companion_density_at(&spec, Degeneracy::Hydrogen, u, 1e-16).unwrap();
            assert!((k / want - 1.0).abs() < 1e-13, "u={u}: {k}");
        }
        // k N^2 = rho pointwise
        for i in 0..=40 {
            let u = 0.5 * i as f64;
            let ln_n2 = 2.0 * hydrogen_log_norm_closed_form(u.sqrt());
            let k = companion_density(&spec, ln_n2, u).unwrap();
            let rho = (-u).exp();
            assert!((k * ln_n2.exp() / rho - 1.0).abs() < 1e-12, "u={u}");
            assert!((k / (1.0 + 3.0 * u + u * u) - 1.0).abs() < 1e-12);
        }
        assert_eq!(companion_density(&spec, 0.0, f64::INFINITY).unwrap(), 0.0);
        assert!(companion_density(&spec, f64::NEG_INFINITY, 1.0).is_err());
        let tab = WeightSpec::tabulated(vec![0.0]).unwrap();
        assert!(matches!(
            companion_density(&tab, 0.0, 1.0),
            Err(Error::DensityUnavailable(_))
        ));
    }

    #[test]
    fn truncation_at_zero_s() {
        assert_eq!(
            truncation_level(&WeightSpec::Exponential, 0.0, Degeneracy::Hydrogen, 1e-12).unwrap(),
            0
        );
    }

    #[test]
    fn truncation_matches_brute_force_sum() {
        // s^2 = 16, d_n = (n+1)^2: linear-scale terms stay in range up to n ~ 150.
        let x: f64 = 16.0;
        let mut terms = Vec::new();
        let mut t = 1.0_f64;
        for n in 0..200u64 {
            if n > 0 {
                t *= x / n as f64;
            }
            terms.push(t * ((n + 1) * (n + 1)) as f64);
        }
        let total: f64 = terms.iter().sum();
        let mut want = 0;
        for n_max in 0..200 {
            let tail: f64 = terms[n_max + 1..].iter().sum();
            if tail < 1e-12 * total {
                want = n_max as u64;
                break;
            }
        }
        let got =
            truncation_level(&WeightSpec::Exponential, 4.0, Degeneracy::Hydrogen, 1e-12).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn worked_example_window() {
        let spec = WeightSpec::stretched(1.0 / 32.0).unwrap();
        let ln_s = 2.209e59f64.ln();
        let (w, _) = truncation_window(&spec, ln_s, Degeneracy::Hydrogen, 1e-12).unwrap();
        assert!(w.n_min <= 150 && w.n_max >= 170, "{w:?}");
        assert!(w.n_max - w.n_min < 60, "{w:?}");
        // The renormalized weights over the window sum to one.
        let n_max = truncation_level(&spec, 2.209e59, Degeneracy::Hydrogen, 1e-12).unwrap();
        let ln_n = log_norm_factor(&spec, 2.209e59, Degeneracy::Hydrogen, n_max).unwrap();
        let p: f64 = (0..=n_max)
            .map(|n| (log_term(&spec, ln_s, Degeneracy::Hydrogen, n).unwrap() + 2.0 * ln_n).exp())
            .sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_concave_table_uses_margin_scan() {
        // A table whose terms dip and then recover must not be truncated at the dip.
        let mut moments: Vec<f64> = (0..400)
            .map(|n| ln_gamma_unchecked(n as f64 + 1.0))
            .collect();
        moments[5] += 60.0; // deep dip in the term at n = 5
        let spec = WeightSpec::tabulated(moments).unwrap();
        let scan = scan_terms(&spec, 0.0, Degeneracy::Unit, 1e-12).unwrap();
        assert!(scan.terms.len() > 10, "{:?}", scan);
        let want = (std::f64::consts::E - (1.0 - (-60.0f64).exp()) / 120.0).ln();
        assert!((scan.log_total() - want).abs() < 1e-13);
    }

    #[test]
    fn divergent_series_is_reported() {
        // Constant moments with s > 1 diverge.
        let spec = WeightSpec::tabulated(vec![0.0; 5000]).unwrap();
        assert!(matches!(
            scan_terms(&spec, 1.0, Degeneracy::Unit, 1e-12),
            Err(Error::Divergent(_))
        ));
    }
}
