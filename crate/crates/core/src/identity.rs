//! Resolution-of-identity checks at truncated dimension.
//!
//! The hydrogen measure factorizes into a radial part `k(u) du` over
//! `u = s^2`, two sphere measures `(1/π) d^2ζ / (1 + |ζ|^2)^2` and a
//! `γ` average. Matrix elements between truncated basis vectors
//! `|n, m1, m2>` are therefore assembled from per-factor integrals:
//!
//! ```text
//! <a|I|b> = sqrt(d_n d_n') R(n, n') / sqrt(rho_n rho_n') * G(e_n, e_n') * S(a1, b1) S(a2, b2)
//! ```
//!
//! `R(n, n') = ∫ k N^2 u^{(n+n')/2} du` with `k N^2 = rho`, so `R` is a
//! (half-integer) moment of the weight. Spheres are integrated in
//! `(x = cos θ, φ)`, where the measure is uniform: Gauss-Legendre in `x`,
//! trapezoid in `φ`.

use crate::error::{Error, Result};
use crate::hydrogen;
use crate::numeric::quadrature::{adaptive_semi_infinite, gauss_laguerre, gauss_legendre};
use crate::su2::{stereographic, su2_amplitudes_linear};
use crate::weights::{log_moment, WeightSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest basis dimension squared `verify_full_identity` will assemble.
pub const MAX_MATRIX_ENTRIES: u64 = 100_000_000;

/// `(1/2Γ) ∫_{-Γ}^{Γ} e^{iγ(ea - eb)} dγ = sinc(Γ (ea - eb))`; requires `gamma > 0`.
pub fn gamma_average(gamma: f64, ea: f64, eb: f64) -> f64 {
    let x = gamma * (ea - eb);
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Rule over `u = s^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialRule {
    /// `order`-point Gauss-Laguerre; exponential weight only.
    GaussLaguerre { order: usize },
    /// Adaptive Gauss-Kronrod on `[0, ∞)`.
    Adaptive { rel_tol: f64 },
}

/// Orders for the sphere factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereRule {
    pub polar_order: usize,
    pub azimuthal: usize,
}

impl SphereRule {
    /// Smallest rule `verify_su2_identity` accepts at spin `two_j / 2`.
    pub fn minimal(two_j: u32) -> Self {
        let k = two_j as usize + 1;
        SphereRule {
            polar_order: k,
            azimuthal: k,
        }
    }

    fn check(&self, two_j: u32) -> Result<()> {
        let required = two_j as usize + 1;
        let given = self.polar_order.min(self.azimuthal);
        if given < required {
            return Err(Error::InsufficientOrder { required, given });
        }
        Ok(())
    }
}

/// How the `γ` limit is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GammaMode {
    /// `δ(e_n, e_n')` substituted for the limit.
    ExactLimit,
    /// Finite window half-width `Γ`.
    Finite { gamma: f64 },
}

impl GammaMode {
    fn factor(&self, ea: f64, eb: f64) -> f64 {
        match *self {
            GammaMode::ExactLimit => {
                if ea == eb {
                    1.0
                } else {
                    0.0
                }
            }
            GammaMode::Finite { gamma } => gamma_average(gamma, ea, eb),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub radial: RadialRule,
    pub sphere: SphereRule,
    pub gamma: GammaMode,
}

impl QuadratureSpec {
    /// Exact rules for principal levels `1..=n_max` under the exponential weight.
    pub fn exact_for(n_max: u32) -> Self {
        QuadratureSpec {
            radial: RadialRule::GaussLaguerre {
                order: n_max as usize + 2,
            },
            sphere: SphereRule::minimal(2 * n_max),
            gamma: GammaMode::ExactLimit,
        }
    }
}

struct SphereNodes {
    zetas: Vec<Complex64>,
    weights: Vec<f64>,
}

/// Nodes of the product rule with weights for `dx dφ / (4π)`.
fn sphere_nodes(rule: SphereRule) -> Result<SphereNodes> {
    if rule.polar_order == 0 || rule.azimuthal == 0 {
        return Err(Error::Domain("sphere rule orders must be positive".into()));
    }
    let gl = gauss_legendre(rule.polar_order);
    let k = rule.azimuthal;
    let mut zetas = Vec::with_capacity(gl.len() * k);
    let mut weights = Vec::with_capacity(gl.len() * k);
    for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
        let theta = x.acos();
        for l in 0..k {
            let phi = 2.0 * PI * l as f64 / k as f64;
            zetas.push(stereographic(theta, phi)?);
            weights.push(w / (2.0 * k as f64));
        }
    }
    Ok(SphereNodes { zetas, weights })
}

/// `∫ (1/π) d^2ζ/(1+|ζ|^2)^2 <j,m|j,ζ><j',ζ|j',m'>` for all `m, m'`,
/// row-major over `(m, m')`.
fn sphere_block(nodes: &SphereNodes, two_j: u32, two_jp: u32) -> Vec<Complex64> {
    let (da, db) = (two_j as usize + 1, two_jp as usize + 1);
    let mut out = vec![Complex64::new(0.0, 0.0); da * db];
    for (&z, &w) in nodes.zetas.iter().zip(&nodes.weights) {
        let a = su2_amplitudes_linear(two_j, z);
        let b = su2_amplitudes_linear(two_jp, z);
        for (i, ai) in a.iter().enumerate() {
            let wa = ai * w;
            for (k, bk) in b.iter().enumerate() {
                out[i * db + k] += wa * bk.conj();
            }
        }
    }
    out
}

/// Max deviation of `(2j+1)/π ∫ d^2ζ/(1+|ζ|^2)^2 |j,ζ><j,ζ|` from the identity.
pub fn verify_su2_identity(two_j: u32, rule: SphereRule) -> Result<f64> {
    rule.check(two_j)?;
    let nodes = sphere_nodes(rule)?;
    let block = sphere_block(&nodes, two_j, two_j);
    let dim = two_j as usize + 1;
    let scale = dim as f64;
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for k in 0..dim {
            let delta = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((block[i * dim + k] * scale - delta).norm());
        }
    }
    Ok(worst)
}

/// Smallest Gauss-Laguerre order exact for `u^n e^{-u}`, `n <= n_max`.
fn laguerre_required(n_max: u64) -> usize {
    n_max as usize / 2 + 1
}

/// `∫ rho(u) u^{(n+n')/2} du / sqrt(rho_n rho_n')` over summation indices.
fn radial_moment_ratio(weight: &WeightSpec, rule: RadialRule, n: u64, np: u64) -> Result<f64> {
    let p = 0.5 * (n + np) as f64;
    let ln_norm = 0.5 * (log_moment(weight, n)? + log_moment(weight, np)?);
    match rule {
        RadialRule::GaussLaguerre { order } => {
            if *weight != WeightSpec::Exponential {
                return Err(Error::Domain(
                    "Gauss-Laguerre radial rule needs the exponential weight".into(),
                ));
            }
            let gl = gauss_laguerre(order);
            Ok(gl.integrate(|u| (p * u.ln() - ln_norm).exp()))
        }
        RadialRule::Adaptive { rel_tol } => {
            if !(rel_tol > 0.0) {
                return Err(Error::Domain(format!("rel_tol must be > 0, got {rel_tol}")));
            }
            weight.log_density(0.0)?;
            let alpha = weight.alpha().unwrap_or(1.0);
            let peak = ((p + 1.0) / alpha).powf(1.0 / alpha).max(1.0);
            let mut bad = None;
            let v = adaptive_semi_infinite(
                |u| {
                    if u <= 0.0 {
                        return if p == 0.0 { (-ln_norm).exp() } else { 0.0 };
                    }
                    match weight.log_density(u) {
                        Ok(lr) => (lr + p * u.ln() - ln_norm).exp(),
                        Err(e) => {
                            bad = Some(e);
                            0.0
                        }
                    }
                },
                0.0,
                peak,
                0.0,
                rel_tol,
            );
            if let Some(e) = bad {
                return Err(e);
            }
            v.map_err(|e| Error::Divergent(format!("radial moment n={n}, n'={np}: {e}")))
        }
    }
}

/// `max_{n <= n_max} |∫ u^n rho(u) du / rho_n - 1|` over summation indices.
pub fn verify_radial_identity(weight: &WeightSpec, n_max: u64, rule: RadialRule) -> Result<f64> {
    if let RadialRule::GaussLaguerre { order } = rule {
        let required = laguerre_required(n_max);
        if order < required {
            return Err(Error::InsufficientOrder {
                required,
                given: order,
            });
        }
    }
    let mut worst = 0.0_f64;
    for n in 0..=n_max {
        worst = worst.max((radial_moment_ratio(weight, rule, n, n)? - 1.0).abs());
    }
    Ok(worst)
}

/// Per-level view of the measure bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct LevelFactors {
    /// Principal quantum number.
    pub n: u32,
    /// `∫ k N^2 u^{n-1} du / rho_{n-1}`; 1 when the radial factor equals `rho_{n-1}`.
    pub radial_ratio: f64,
    /// `ln(d_n / rho_{n-1})`.
    pub ln_spectral_prefactor: f64,
    /// `max |d_n (S ⊗ S) - 1|` for the pair of sphere integrals.
    pub sphere_deviation: f64,
    /// `|prefactor * radial * sphere trace / d_n - 1|`.
    pub diagonal_deviation: f64,
}

/// Result of assembling the truncated identity.
#[derive(Clone, Debug, Serialize)]
pub struct FullIdentity {
    pub n_max: u32,
    pub dim: usize,
    pub gamma: GammaMode,
    /// `max |<a|I|b> - δ_ab|`.
    pub max_deviation: f64,
    /// Max deviation restricted to same-level pairs.
    pub max_in_level_deviation: f64,
    /// Largest cross-level `|<a|I|b>|`.
    pub max_cross_level: f64,
    /// Largest cross-level `|<a|I|b>| Γ |e_a - e_b|`; present for finite `Γ`.
    pub max_cross_bound_ratio: Option<f64>,
    pub levels: Vec<LevelFactors>,
}

fn check_full(weight: &WeightSpec, n_max: u32, quad: &QuadratureSpec) -> Result<usize> {
    weight.validate()?;
    if n_max == 0 {
        return Err(Error::Domain("n_max must be >= 1".into()));
    }
    if let GammaMode::Finite { gamma } = quad.gamma {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "Γ must be finite and > 0, got {gamma}"
            )));
        }
    }
    // The in-level blocks need exactness at 2j = n_max - 1; cross-level
    // phases run up to 2j = 2 n_max - 2 in φ.
    quad.sphere.check(n_max - 1)?;
    if let RadialRule::GaussLaguerre { order } = quad.radial {
        let required = laguerre_required(n_max as u64 - 1);
        if order < required {
            return Err(Error::InsufficientOrder {
                required,
                given: order,
            });
        }
    }
    let dim: u64 = (1..=n_max as u64).map(|n| n * n).sum();
    let entries = dim * dim;
    if entries > MAX_MATRIX_ENTRIES {
        return Err(Error::Budget {
            required: entries,
            budget: MAX_MATRIX_ENTRIES,
        });
    }
    Ok(dim as usize)
}

/// Assemble `∫ dμ |s,γ,ζ1,ζ2><s,γ,ζ1,ζ2|` on principal levels `1..=n_max`.
pub fn verify_full_identity(
    weight: &WeightSpec,
    n_max: u32,
    quad: &QuadratureSpec,
) -> Result<FullIdentity> {
    let dim = check_full(weight, n_max, quad)?;
    let nodes = sphere_nodes(quad.sphere)?;
    let levels: Vec<u32> = (1..=n_max).collect();

    // Sphere blocks S[n][n'] and radial ratios R[n][n'].
    let pairs: Vec<(u32, u32)> = levels
        .iter()
        .flat_map(|&a| levels.iter().map(move |&b| (a, b)))
        .collect();
    let blocks: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(a, b)| sphere_block(&nodes, a - 1, b - 1))
        .collect();
    let radial: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| radial_moment_ratio(weight, quad.radial, a as u64 - 1, b as u64 - 1))
        .collect::<Result<_>>()?;
    let energies: Vec<f64> = levels
        .iter()
        .map(|&n| hydrogen::energy(n as u64))
        .collect::<Result<_>>()?;

    let nl = n_max as usize;
    let mut max_dev = 0.0_f64;
    let mut max_in = 0.0_f64;
    let mut max_cross = 0.0_f64;
    let mut max_ratio = 0.0_f64;
    for (ia, &na) in levels.iter().enumerate() {
        for (ib, &nb) in levels.iter().enumerate() {
            let p = ia * nl + ib;
            let s = &blocks[p];
            let g = quad.gamma.factor(energies[ia], energies[ib]);
            let pref = (na as f64) * (nb as f64) * radial[p] * g;
            let (da, db) = (na as usize, nb as usize);
            for a1 in 0..da {
                for a2 in 0..da {
                    for b1 in 0..db {
                        for b2 in 0..db {
                            let v = s[a1 * db + b1] * s[a2 * db + b2] * pref;
                            let delta = if ia == ib && a1 == b1 && a2 == b2 {
                                1.0
                            } else {
                                0.0
                            };
                            let dev = (v - delta).norm();
                            max_dev = max_dev.max(dev);
                            if ia == ib {
                                max_in = max_in.max(dev);
                            } else {
                                max_cross = max_cross.max(v.norm());
                                if let GammaMode::Finite { gamma } = quad.gamma {
                                    let bound = gamma * (energies[ia] - energies[ib]).abs();
                                    max_ratio = max_ratio.max(v.norm() * bound);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let level_factors = levels
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let p = i * nl + i;
            let d = (n as f64) * (n as f64);
            let s = &blocks[p];
            let k = n as usize;
            let mut sphere_dev = 0.0_f64;
            let mut trace = 0.0;
            for a1 in 0..k {
                for a2 in 0..k {
                    for b1 in 0..k {
                        for b2 in 0..k {
                            let v = s[a1 * k + b1] * s[a2 * k + b2] * d;
                            let delta = if a1 == b1 && a2 == b2 { 1.0 } else { 0.0 };
                            sphere_dev = sphere_dev.max((v - delta).norm());
                            if a1 == b1 && a2 == b2 {
                                trace += v.re / d;
                            }
                        }
                    }
                }
            }
            let ln_rho = log_moment(weight, n as u64 - 1)?;
            let ln_pref = d.ln() - ln_rho;
            // prefactor * (radial_ratio * rho) * (trace / d) / d
            let diag = (ln_pref + ln_rho).exp() * radial[p] * trace / d;
            Ok(LevelFactors {
                n,
                radial_ratio: radial[p],
                ln_spectral_prefactor: ln_pref,
                sphere_deviation: sphere_dev,
                diagonal_deviation: (diag - 1.0).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FullIdentity {
        n_max,
        dim,
        gamma: quad.gamma,
        max_deviation: max_dev,
        max_in_level_deviation: max_in,
        max_cross_level: max_cross,
        max_cross_bound_ratio: match quad.gamma {
            GammaMode::Finite { .. } => Some(max_ratio),
            GammaMode::ExactLimit => None,
        },
        levels: level_factors,
    })
}

/// Outcome of one named check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    InsufficientOrder,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub truncation: String,
    pub orders: String,
    pub max_deviation: Option<f64>,
    pub tolerance: f64,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CheckReport {
    fn from_result(
        name: impl Into<String>,
        truncation: String,
        orders: String,
        tolerance: f64,
        result: Result<f64>,
    ) -> Self {
        let (max_deviation, status, message) = match result {
            Ok(dev) if dev <= tolerance => (Some(dev), CheckStatus::Pass, None),
            Ok(dev) => (Some(dev), CheckStatus::Fail, None),
            Err(e @ Error::InsufficientOrder { .. }) => {
                (None, CheckStatus::InsufficientOrder, Some(e.to_string()))
            }
            Err(e) => (None, CheckStatus::Error, Some(e.to_string())),
        };
        CheckReport {
            name: name.into(),
            truncation,
            orders,
            max_deviation,
            tolerance,
            status,
            message,
        }
    }
}

/// Settings for the bundled verification suite.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub weight: WeightSpec,
    /// Largest `2j` for the SU(2) check.
    pub su2_two_j_max: u32,
    /// Sphere rule override; default is minimal per spin.
    pub sphere: Option<SphereRule>,
    /// Largest summation index for the radial check.
    pub radial_n_max: u64,
    pub radial: RadialRule,
    /// Principal cut-off of the assembled identity.
    pub full_n_max: u32,
    /// Window half-widths for the finite-`Γ` demonstration.
    pub gammas: Vec<f64>,
    pub su2_tol: f64,
    pub radial_tol: f64,
    pub full_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            weight: WeightSpec::Exponential,
            su2_two_j_max: 10,
            sphere: None,
            radial_n_max: 10,
            radial: RadialRule::GaussLaguerre { order: 11 },
            full_n_max: 3,
            gammas: vec![1e3, 1e4, 1e5],
            su2_tol: 1e-12,
            radial_tol: 1e-12,
            full_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn any_insufficient_order(&self) -> bool {
        self.checks
            .iter()
            .any(|c| c.status == CheckStatus::InsufficientOrder)
    }
}

fn orders_string(rule: RadialRule) -> String {
    match rule {
        RadialRule::GaussLaguerre { order } => format!("gauss-laguerre {order}"),
        RadialRule::Adaptive { rel_tol } => format!("adaptive rel_tol {rel_tol:e}"),
    }
}

/// Run the SU(2), radial, assembled and finite-`Γ` checks.
pub fn run_verification(cfg: &VerifyConfig) -> VerifyReport {
    let mut checks = Vec::new();

    let sphere_for = |two_j: u32| cfg.sphere.unwrap_or(SphereRule::minimal(two_j));
    let su2 = (0..=cfg.su2_two_j_max).try_fold(0.0_f64, |acc, tj| {
        verify_su2_identity(tj, sphere_for(tj)).map(|d| acc.max(d))
    });
    let su2_orders = match cfg.sphere {
        Some(r) => format!("polar {} x azimuthal {}", r.polar_order, r.azimuthal),
        None => "minimal per spin".into(),
    };
    checks.push(CheckReport::from_result(
        "su2_identity",
        format!("2j <= {}", cfg.su2_two_j_max),
        su2_orders,
        cfg.su2_tol,
        su2,
    ));

    checks.push(CheckReport::from_result(
        "radial_identity",
        format!("n <= {}", cfg.radial_n_max),
        orders_string(cfg.radial),
        cfg.radial_tol,
        verify_radial_identity(&cfg.weight, cfg.radial_n_max, cfg.radial),
    ));

    let full_sphere = cfg
        .sphere
        .unwrap_or(SphereRule::minimal(2 * cfg.full_n_max));
    let full_orders = format!(
        "{}; sphere {} x {}",
        orders_string(cfg.radial),
        full_sphere.polar_order,
        full_sphere.azimuthal
    );
    let quad = QuadratureSpec {
        radial: cfg.radial,
        sphere: full_sphere,
        gamma: GammaMode::ExactLimit,
    };
    let exact = verify_full_identity(&cfg.weight, cfg.full_n_max, &quad);
    let truncation = format!("principal n <= {}", cfg.full_n_max);
    let (full_dev, factor_dev) = match &exact {
        Ok(r) => {
            let f = r
                .levels
                .iter()
                .map(|l| {
                    (l.radial_ratio - 1.0)
                        .abs()
                        .max(l.sphere_deviation)
                        .max(l.diagonal_deviation)
                })
                .fold(0.0, f64::max);
            (Ok(r.max_deviation), Ok(f))
        }
        Err(Error::InsufficientOrder { required, given }) => (
            Err(Error::InsufficientOrder {
                required: *required,
                given: *given,
            }),
            Err(Error::InsufficientOrder {
                required: *required,
                given: *given,
            }),
        ),
        Err(e) => (
            Err(Error::Numerical(e.to_string())),
            Err(Error::Numerical(e.to_string())),
        ),
    };
    checks.push(CheckReport::from_result(
        "full_identity_exact_limit",
        truncation.clone(),
        full_orders.clone(),
        cfg.full_tol,
        full_dev,
    ));
    checks.push(CheckReport::from_result(
        "measure_factors",
        truncation.clone(),
        full_orders.clone(),
        cfg.full_tol,
        factor_dev,
    ));

    for &gamma in &cfg.gammas {
        let quad = QuadratureSpec {
            gamma: GammaMode::Finite { gamma },
            ..quad
        };
        // Reported deviation is the excess of |entry| Γ|Δe| over 1.
        let res = verify_full_identity(&cfg.weight, cfg.full_n_max, &quad)
            .map(|r| (r.max_cross_bound_ratio.unwrap_or(0.0) - 1.0).max(0.0));
        checks.push(CheckReport::from_result(
            format!("finite_gamma_bound gamma={gamma:e}"),
            truncation.clone(),
            full_orders.clone(),
            0.0,
            res,
        ));
    }

    let passed = checks.iter().all(|c| c.status == CheckStatus::Pass);
    VerifyReport { checks, passed }
}
