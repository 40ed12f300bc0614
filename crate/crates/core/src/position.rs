//! Position space: hydrogen eigenfunctions, planar fields, position and
//! angular-momentum expectations, and the eccentricity mapping.
//!
//! Expectation values use a product rule: composite Gauss-Legendre panels in
//! `r`, Gauss-Legendre in `cos theta`, and the azimuthal integral done exactly
//! on the Fourier modes `e^{i m phi}` (equivalent to a trapezoid rule with more
//! than `2 l_max + 2` points).

use crate::error::{Error, Result};
use crate::numeric::ln_factorial;
use crate::numeric::quadrature::{composite_gauss_legendre, gauss_legendre, Rule};
use crate::state::CoherentState;
use crate::su2::{
    so4_amplitudes, so4_to_spherical, spin_expectation, su2_amplitudes_linear, zeta_for_direction,
    AngularParams, SphericalAmplitudes,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default limit on `n_max^2 * samples^2` for grid evaluation.
pub const DEFAULT_GRID_BUDGET: u64 = 4_000_000_000;

/// Laguerre values are renormalized past this magnitude.
const RESCALE_AT: f64 = 1e200;

/// `ln` of the normalization of `R_nl`.
fn ln_radial_norm(n: u64, l: u64) -> f64 {
    let nf = n as f64;
    0.5 * (3.0 * (2.0 / nf).ln() + ln_factorial(n - l - 1) - (2.0 * nf).ln() - ln_factorial(n + l))
}

/// `(ln |L^{(a)}_k(x)|, sign)` by upward recurrence with rescaling.
fn ln_laguerre(k: u64, a: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if k == 0 {
        return (0.0, 1.0);
    }
    let mut p1 = 1.0 + a - x;
    let mut carry = 0.0;
    for i in 1..k {
        let i = i as f64;
        let p2 = ((2.0 * i + 1.0 + a - x) * p1 - (i + a) * p0) / (i + 1.0);
        p0 = p1;
        p1 = p2;
        if p1.abs() > RESCALE_AT {
            p0 /= RESCALE_AT;
            p1 /= RESCALE_AT;
            carry += RESCALE_AT.ln();
        }
    }
    if p1 == 0.0 {
        return (f64::NEG_INFINITY, 1.0);
    }
    (p1.abs().ln() + carry, p1.signum())
}

fn radial_unchecked(n: u64, l: u64, r: f64) -> f64 {
    let x = 2.0 * r / n as f64;
    if l > 0 && x == 0.0 {
        return 0.0;
    }
    let (ln_lag, sign) = ln_laguerre(n - l - 1, (2 * l + 1) as f64, x);
    let ln_pow = if l == 0 { 0.0 } else { l as f64 * x.ln() };
    sign * (ln_radial_norm(n, l) + ln_pow - 0.5 * x + ln_lag).exp()
}

/// Normalized radial function `R_nl(r)`, `∫ R^2 r^2 dr = 1`.
pub fn radial(n: u64, l: u64, r: f64) -> Result<f64> {
    if n < 1 || l >= n {
        return Err(Error::Domain(format!(
            "invalid quantum numbers n={n}, l={l}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "radius must be finite and >= 0, got {r}"
        )));
    }
    Ok(radial_unchecked(n, l, r))
}

/// Normalized associated Legendre values `P̄_l^m(cos theta)` for `0 <= m <= l <= l_max`,
/// such that `Y_lm = P̄_l^m e^{i m phi}` with the Condon-Shortley phase.
/// Indexed `l (l + 1) / 2 + m`.
pub fn legendre_table(l_max: usize, cos_theta: f64) -> Vec<f64> {
    let x = cos_theta;
    let sin_t = (1.0 - x * x).max(0.0).sqrt();
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
    let mut pmm = 0.5 / PI.sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
        }
        p[idx(m, m)] = pmm;
        if m == l_max {
            break;
        }
        let mut prev = pmm;
        let mut cur = ((2 * m + 3) as f64).sqrt() * x * pmm;
        p[idx(m + 1, m)] = cur;
        let mf = m as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lp = lf - 1.0;
            let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
            let next = a * (x * cur - prev / a_prev);
            prev = cur;
            cur = next;
            p[idx(l, m)] = cur;
        }
    }
    p
}

/// Orthonormal spherical harmonic `Y_lm(theta, phi)`, Condon-Shortley phase.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() > l {
        return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    let ma = m.unsigned_abs() as usize;
    let table = legendre_table(l as usize, theta.cos());
    let p = table[l as usize * (l as usize + 1) / 2 + ma];
    let y = Complex64::from_polar(p, ma as f64 * phi);
    if m >= 0 {
        Ok(y)
    } else if ma.is_multiple_of(2) {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Square planar grid on `z = 0`, centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub width: f64,
    pub samples: usize,
}

impl GridSpec {
    pub fn new(width: f64, samples: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Domain(format!(
                "grid width must be positive, got {width}"
            )));
        }
        if samples < 2 {
            return Err(Error::Domain(format!(
                "grid needs at least 2 samples per side, got {samples}"
            )));
        }
        Ok(GridSpec { width, samples })
    }

    /// Coordinate of sample `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.width + self.width * i as f64 / (self.samples - 1) as f64
    }
}

/// Field values, row-major with `y` varying slowest: `values[iy * samples + ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.spec.samples + ix]
    }
}

/// Per-level angular amplitudes over `(l, m)` for the state's window.
fn level_amplitudes(state: &CoherentState) -> Result<Vec<SphericalAmplitudes>> {
    let c = state.coeffs();
    (c.n_min..=c.n_max)
        .map(|n| {
            Ok(so4_to_spherical(&so4_amplitudes(
                n as u32 + 1,
                state.angular(),
            )?))
        })
        .collect()
}

/// `h_k(l, m) = c_k g_k(l, m)` for every kept level `k`.
fn weighted_amplitudes(state: &CoherentState, ang: &[SphericalAmplitudes]) -> Vec<Vec<Complex64>> {
    state
        .coeffs()
        .iter()
        .zip(ang)
        .map(|((_, c), g)| {
            let c = c.to_complex();
            g.coeffs.iter().map(|x| c * x).collect()
        })
        .collect()
}

/// `Ψ(x, y, 0, t)` on a planar grid.
///
/// Refuses with [`Error::Budget`] when `n_max^2 * samples^2` exceeds `budget`.
pub fn field_on_grid(
    state: &CoherentState,
    grid: GridSpec,
    t: f64,
    budget: u64,
) -> Result<GridField> {
    Ok(fields_on_grid(state, grid, &[t], budget)?.remove(0))
}

/// [`field_on_grid`] at several times, sharing the angular amplitudes.
pub fn fields_on_grid(
    state: &CoherentState,
    grid: GridSpec,
    times: &[f64],
    budget: u64,
) -> Result<Vec<GridField>> {
    let n_hi = state.coeffs().n_max + 1;
    let required = (n_hi * n_hi).saturating_mul((grid.samples * grid.samples) as u64);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let ang = level_amplitudes(state)?;
    times
        .iter()
        .map(|&t| field_with_amplitudes(state, &ang, grid, t))
        .collect()
}

fn field_with_amplitudes(
    state: &CoherentState,
    ang: &[SphericalAmplitudes],
    grid: GridSpec,
    t: f64,
) -> Result<GridField> {
    let n_hi = state.coeffs().n_max + 1;
    let evolved = crate::state::evolve(state, t);
    let h = weighted_amplitudes(&evolved, ang);
    let l_max = (n_hi - 1) as usize;
    let p_eq = legendre_table(l_max, 0.0);
    let n_min = evolved.coeffs().n_min;

    let samples = grid.samples;
    let values: Vec<Complex64> = (0..samples * samples)
        .into_par_iter()
        .map(|idx| {
            let x = grid.coord(idx % samples);
            let y = grid.coord(idx / samples);
            let r = x.hypot(y);
            let phi = y.atan2(x);
            // acc[m + l_max] = sum_{k, l} h_k(l, m) P̄_lm(0) R_{N_k l}(r)
            let mut acc = vec![Complex64::new(0.0, 0.0); 2 * l_max + 1];
            for (k, hk) in h.iter().enumerate() {
                let big_n = n_min + k as u64 + 1;
                for l in 0..big_n {
                    let rv = radial_unchecked(big_n, l, r);
                    if rv == 0.0 {
                        continue;
                    }
                    let li = l as i32;
                    for m in -li..=li {
                        let ma = m.unsigned_abs() as usize;
                        if (l as usize + ma) % 2 == 1 {
                            continue; // P̄_lm(0) = 0
                        }
                        let mut p = p_eq[l as usize * (l as usize + 1) / 2 + ma];
                        if m < 0 && ma % 2 == 1 {
                            p = -p;
                        }
                        acc[(m + l_max as i32) as usize] +=
                            hk[SphericalAmplitudes::index(l as u32, m)] * (p * rv);
                    }
                }
            }
            let step = Complex64::from_polar(1.0, phi);
            let mut e = Complex64::from_polar(1.0, -(l_max as f64) * phi);
            let mut psi = Complex64::new(0.0, 0.0);
            for a in &acc {
                psi += a * e;
                e *= step;
            }
            psi
        })
        .collect();
    Ok(GridField {
        spec: grid,
        t,
        values,
    })
}

/// Orders of the 3-D product rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionQuadrature {
    /// Gauss-Legendre order per radial panel.
    pub radial_order: usize,
    /// Gauss-Legendre order in `cos theta`; `None` picks `n_max + 2`.
    pub polar_order: Option<usize>,
}

impl Default for PositionQuadrature {
    fn default() -> Self {
        PositionQuadrature {
            radial_order: 24,
            polar_order: None,
        }
    }
}

/// Graded radial panels `[0, 2], [2, 6], ...` doubling up to width 64, then
/// uniform, out to `n (2n + 30)` where the outermost level has decayed.
fn radial_rule(n_hi: u64, order: usize) -> Rule {
    let r_max = n_hi as f64 * (2.0 * n_hi as f64 + 30.0);
    let mut breaks = vec![0.0];
    let mut width = 2.0;
    let mut r = 0.0;
    while r < r_max {
        r += width;
        breaks.push(r);
        if width < 64.0 {
            width *= 2.0;
        }
    }
    composite_gauss_legendre(&breaks, order)
}

/// Radial values `R_{N l}(r)` at every node for every kept level, and the
/// angular-integration data shared by the expectation routines.
pub struct PositionIntegrator {
    n_min: u64,
    n_hi: u64,
    radial: Rule,
    /// `radial_values[node][offset(k) + l]`
    radial_values: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    polar: Rule,
    /// Legendre tables at each polar node.
    legendre: Vec<Vec<f64>>,
    angular: Vec<SphericalAmplitudes>,
}

/// Integrated moments of `|Ψ|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionMoments {
    pub norm: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PositionIntegrator {
    /// Precompute for the state's window and angular parameters.
    pub fn new(state: &CoherentState, quad: PositionQuadrature) -> Result<Self> {
        let c = state.coeffs();
        let n_hi = c.n_max + 1;
        let polar_needed = n_hi as usize + 2;
        let polar_order = quad.polar_order.unwrap_or(polar_needed);
        if polar_order < polar_needed {
            return Err(Error::InsufficientOrder {
                required: polar_needed,
                given: polar_order,
            });
        }
        if quad.radial_order < 8 {
            return Err(Error::InsufficientOrder {
                required: 8,
                given: quad.radial_order,
            });
        }
        let radial = radial_rule(n_hi, quad.radial_order);
        let mut offsets = Vec::new();
        let mut total = 0usize;
        for n in c.n_min..=c.n_max {
            offsets.push(total);
            total += (n + 1) as usize;
        }
        let n_min = c.n_min;
        let radial_values: Vec<Vec<f64>> = radial
            .nodes
            .par_iter()
            .map(|&r| {
                let mut v = Vec::with_capacity(total);
                for n in n_min..=c.n_max {
                    for l in 0..=n {
                        v.push(radial_unchecked(n + 1, l, r));
                    }
                }
                v
            })
            .collect();
        let polar = gauss_legendre(polar_order);
        let l_max = (n_hi - 1) as usize;
        let legendre = polar
            .nodes
            .iter()
            .map(|&u| legendre_table(l_max, u))
            .collect();
        Ok(PositionIntegrator {
            n_min,
            n_hi,
            radial,
            radial_values,
            offsets,
            polar,
            legendre,
            angular: level_amplitudes(state)?,
        })
    }

    /// Moments of `|Ψ(t)|^2` for a state sharing this integrator's window
    /// and angular parameters.
    pub fn moments(&self, state: &CoherentState, t: f64) -> Result<PositionMoments> {
        let c = state.coeffs();
        if c.n_min != self.n_min || c.n_max + 1 != self.n_hi {
            return Err(Error::Domain(
                "state window differs from the integrator's".into(),
            ));
        }
        let evolved = crate::state::evolve(state, t);
        let h = weighted_amplitudes(&evolved, &self.angular);
        let l_max = (self.n_hi - 1) as usize;
        let n_lm = (l_max + 1) * (l_max + 1);

        const CHUNK: usize = 32;
        let nodes: Vec<usize> = (0..self.radial.len()).collect();
        let partials: Vec<[f64; 4]> = nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = [0.0f64; 4];
                let mut f = vec![Complex64::new(0.0, 0.0); n_lm];
                let mut g = vec![Complex64::new(0.0, 0.0); 2 * l_max + 1];
                for &i in chunk {
                    let r = self.radial.nodes[i];
                    let wr = self.radial.weights[i];
                    let rv = &self.radial_values[i];
                    f.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                    for (k, hk) in h.iter().enumerate() {
                        let big_n = self.n_min as usize + k + 1;
                        for l in 0..big_n {
                            let rr = rv[self.offsets[k] + l];
                            let base = l * l;
                            for j in 0..(2 * l + 1) {
                                f[base + j] += hk[base + j] * rr;
                            }
                        }
                    }
                    for (pi, (&u, &wu)) in
                        self.polar.nodes.iter().zip(&self.polar.weights).enumerate()
                    {
                        let leg = &self.legendre[pi];
                        let sin_t = (1.0 - u * u).max(0.0).sqrt();
                        g.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                        for l in 0..=l_max {
                            let base = l * l + l;
                            for ma in 0..=l {
                                let p = leg[l * (l + 1) / 2 + ma];
                                g[l_max + ma] += f[base + ma] * p;
                                if ma > 0 {
                                    let pm = if ma % 2 == 1 { -p } else { p };
                                    g[l_max - ma] += f[base - ma] * pm;
                                }
                            }
                        }
                        let dens: f64 = g.iter().map(|x| x.norm_sqr()).sum();
                        let mut cross = Complex64::new(0.0, 0.0);
                        for m in 0..2 * l_max {
                            cross += g[m] * g[m + 1].conj();
                        }
                        let w = 2.0 * PI * wr * wu * r * r;
                        acc[0] += w * dens;
                        acc[1] += w * r * sin_t * cross.re;
                        acc[2] += w * r * sin_t * cross.im;
                        acc[3] += w * r * u * dens;
                    }
                }
                acc
            })
            .collect();
        let mut total = [0.0f64; 4];
        for p in partials {
            for k in 0..4 {
                total[k] += p[k];
            }
        }
        Ok(PositionMoments {
            norm: total[0],
            x: total[1],
            y: total[2],
            z: total[3],
        })
    }
}

/// `(<x>, <y>)` at time `t`.
pub fn position_expectation(
    state: &CoherentState,
    t: f64,
    quad: PositionQuadrature,
) -> Result<(f64, f64)> {
    let m = PositionIntegrator::new(state, quad)?.moments(state, t)?;
    Ok((m.x, m.y))
}

/// `<L>` from the spherical amplitudes of every level.
pub fn angular_momentum_expectation(state: &CoherentState) -> Result<[f64; 3]> {
    let ang = level_amplitudes(state)?;
    let mut out = [0.0; 3];
    for ((_, c), g) in state.coeffs().iter().zip(&ang) {
        let p = c.norm_sqr();
        let mut lz = 0.0;
        let mut lplus = Complex64::new(0.0, 0.0);
        for l in 0..g.n {
            let lf = l as f64;
            for m in -(l as i32)..=(l as i32) {
                let a = g.get(l, m);
                lz += m as f64 * a.norm_sqr();
                if m < l as i32 {
                    let mf = m as f64;
                    let k = (lf * (lf + 1.0) - mf * (mf + 1.0)).sqrt();
                    lplus += g.get(l, m + 1).conj() * a * k;
                }
            }
        }
        out[0] += p * lplus.re;
        out[1] += p * lplus.im;
        out[2] += p * lz;
    }
    Ok(out)
}

/// Spin expectations `(<M>, <N>)` of the two SU(2) factors at level `n`.
pub fn spin_pair_expectation(n: u32, params: &AngularParams) -> ([f64; 3], [f64; 3]) {
    let two_j = n - 1;
    let m = spin_expectation(two_j, &su2_amplitudes_linear(two_j, params.zeta1));
    let nn = spin_expectation(two_j, &su2_amplitudes_linear(two_j, params.zeta2));
    (m, nn)
}

/// Angular parameters for a Kepler ellipse of eccentricity `ε` with its
/// major axis on `x` and its angular momentum on the `z` axis.
///
/// With `β = asin ε` the two spins point along `(±sin β, 0, -cos β)`, so
/// `<M> - <N> = 2j sin β x̂` and `<M> + <N> = -2j cos β ẑ`. The `-ẑ` sign
/// is forced by the fiducial `|j, -j>`: `ε = 0` maps to `ζ1 = ζ2 = 0`.
/// The first spin carries `+sin β`, which puts the perihelion on `+x`.
pub fn ellipse_to_angular(eccentricity: f64) -> Result<AngularParams> {
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(Error::Domain(format!(
            "eccentricity must lie in [0, 1), got {eccentricity}"
        )));
    }
    let beta = eccentricity.asin();
    let (sb, cb) = beta.sin_cos();
    let z1 = zeta_for_direction([sb, 0.0, -cb])?;
    let z2 = zeta_for_direction([-sb, 0.0, -cb])?;
    AngularParams::new(z1, z2)
}
