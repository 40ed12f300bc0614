//! SU(2) Perelomov coherent states, their SO(4) products, and the
//! Clebsch-Gordan change of basis to hydrogen `|n, l, m>` labels.
//!
//! Angular momenta are passed doubled (`two_j = 2j`, `two_m = 2m`) so that
//! half-integers stay exact. Component `i` of an amplitude vector belongs to
//! `m = i - j`.
//!
//! Orientation: with the fiducial vector `|j, -j>` and
//! `zeta = -tan(theta/2) e^{-i phi}`, the spin expectation of `|j, zeta>` is
//! `-j` times the unit vector at `(theta, phi)`; the state points at the
//! antipode of its stereographic label. `spin_direction` measures this and
//! the tests pin it.

use crate::error::{Error, Result};
use crate::numeric::dd::DoubleDouble;
use crate::numeric::{ln_binomial, ln_factorial, LogComplex};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Stereographic parameter and spin of one SU(2) coherent state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParam {
    pub zeta: Complex64,
    pub two_j: u32,
}

/// The pair `(zeta1, zeta2)` labelling an SO(4) coherent state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularParams {
    pub zeta1: Complex64,
    pub zeta2: Complex64,
}

impl AngularParams {
    pub fn new(zeta1: Complex64, zeta2: Complex64) -> Result<Self> {
        let p = AngularParams { zeta1, zeta2 };
        p.validate()?;
        Ok(p)
    }

    /// Both factors at the fiducial vector.
    pub fn fiducial() -> Self {
        AngularParams {
            zeta1: Complex64::new(0.0, 0.0),
            zeta2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for z in [self.zeta1, self.zeta2] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Domain(format!(
                    "stereographic parameter {z} is not finite"
                )));
            }
        }
        Ok(())
    }
}

impl Default for AngularParams {
    fn default() -> Self {
        AngularParams::fiducial()
    }
}

/// `ln(1 + |z|^2)` without overflow.
fn ln_one_plus_norm_sqr(z: Complex64) -> f64 {
    let r = z.norm();
    if r > 1.0 {
        2.0 * r.ln() + (1.0 / (r * r)).ln_1p()
    } else {
        (r * r).ln_1p()
    }
}

/// Amplitudes `<j, m | j, zeta>` for `m = -j..=j`, in log-polar form:
/// `sqrt((2j)! / ((j+m)! (j-m)!)) zeta^{j+m} / (1 + |zeta|^2)^j`.
pub fn su2_amplitudes(two_j: u32, zeta: Complex64) -> Vec<LogComplex> {
    let dim = two_j as usize + 1;
    let j = 0.5 * two_j as f64;
    let ln_r = zeta.norm().ln();
    let arg = zeta.arg();
    let ln_den = j * ln_one_plus_norm_sqr(zeta);
    (0..dim)
        .map(|i| {
            if i == 0 {
                return LogComplex::new(-ln_den, 0.0);
            }
            if ln_r == f64::NEG_INFINITY {
                return LogComplex::ZERO;
            }
            let ln_abs = 0.5 * ln_binomial(two_j as u64, i as u64) + i as f64 * ln_r - ln_den;
            LogComplex::new(ln_abs, i as f64 * arg)
        })
        .collect()
}

/// Linear-scale amplitudes; entries below the `f64` range become zero.
pub fn su2_amplitudes_linear(two_j: u32, zeta: Complex64) -> Vec<Complex64> {
    su2_amplitudes(two_j, zeta)
        .into_iter()
        .map(LogComplex::to_complex)
        .collect()
}

/// `zeta = -tan(theta/2) e^{-i phi}` for `0 <= theta < π`.
pub fn stereographic(theta: f64, phi: f64) -> Result<Complex64> {
    if !(0.0..std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
        return Err(Error::Domain(format!(
            "stereographic map needs 0 <= theta < π and finite phi, got ({theta}, {phi})"
        )));
    }
    let r = -(0.5 * theta).tan();
    Ok(Complex64::from_polar(r, -phi))
}

/// `<J> / j` for a normalized spin-`j` amplitude vector.
pub fn spin_expectation(two_j: u32, amps: &[Complex64]) -> [f64; 3] {
    let j = 0.5 * two_j as f64;
    let mut jz = 0.0;
    let mut jplus = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let m = i as f64 - j;
        jz += m * a.norm_sqr();
        if i + 1 < amps.len() {
            let c = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            jplus += amps[i + 1].conj() * a * c;
        }
    }
    [jplus.re, jplus.im, jz]
}

/// Measured unit direction of `<J>` for `|j, zeta>` (`j > 0`).
pub fn spin_direction(two_j: u32, zeta: Complex64) -> [f64; 3] {
    let j = 0.5 * two_j as f64;
    let amps = su2_amplitudes_linear(two_j, zeta);
    let v = spin_expectation(two_j, &amps);
    [v[0] / j, v[1] / j, v[2] / j]
}

/// Stereographic parameter whose coherent state has `<J>` along `dir`.
///
/// Uses the measured orientation: the label sits at the antipode of `<J>`.
/// `dir = +z` would need `theta = π` and is rejected.
pub fn zeta_for_direction(dir: [f64; 3]) -> Result<Complex64> {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Domain(
            "direction must be a nonzero finite vector".into(),
        ));
    }
    let (x, y, z) = (-dir[0] / norm, -dir[1] / norm, -dir[2] / norm);
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    stereographic(theta, phi)
}

/// Closed-form overlap `<j, zeta_a | j, zeta_b>`.
pub fn su2_overlap_closed_form(two_j: u32, zeta_a: Complex64, zeta_b: Complex64) -> LogComplex {
    let j = 0.5 * two_j as f64;
    if two_j == 0 {
        return LogComplex::new(0.0, 0.0);
    }
    let num = Complex64::new(1.0, 0.0) + zeta_a.conj() * zeta_b;
    let ln_num = num.norm().ln();
    if ln_num == f64::NEG_INFINITY {
        return LogComplex::ZERO;
    }
    LogComplex::new(
        two_j as f64 * ln_num - j * (ln_one_plus_norm_sqr(zeta_a) + ln_one_plus_norm_sqr(zeta_b)),
        two_j as f64 * num.arg(),
    )
}

/// Amplitudes `A(m1, m2) = a(m1) b(m2)` of the SO(4) coherent state in
/// level `n` (`j = (n-1)/2`), stored row-major over `(m1, m2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularAmplitudes {
    pub n: u32,
    pub amps: Vec<LogComplex>,
}

impl AngularAmplitudes {
    pub fn two_j(&self) -> u32 {
        self.n - 1
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    pub fn get(&self, i1: usize, i2: usize) -> LogComplex {
        self.amps[i1 * self.dim() + i2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(LogComplex::norm_sqr).sum()
    }

    pub fn to_linear(&self) -> Vec<Complex64> {
        self.amps.iter().map(|a| a.to_complex()).collect()
    }
}

pub fn so4_amplitudes(n: u32, params: &AngularParams) -> Result<AngularAmplitudes> {
    if n < 1 {
        return Err(Error::Domain(
            "principal quantum number must be >= 1".into(),
        ));
    }
    params.validate()?;
    let two_j = n - 1;
    let a = su2_amplitudes(two_j, params.zeta1);
    let b = su2_amplitudes(two_j, params.zeta2);
    let mut amps = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            amps.push(*x * *y);
        }
    }
    Ok(AngularAmplitudes { n, amps })
}

fn ln_fact_i(k: i64) -> f64 {
    ln_factorial(k as u64)
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | J M>` (Condon-Shortley phase),
/// all arguments doubled. Selection-rule violations give exactly 0.
///
/// Racah's single-sum formula. The summands follow from their first member
/// by exact rational ratios, accumulated in double-double so the alternating
/// cancellation costs nothing at the sizes used here; only the common
/// prefactor goes through log-factorials.
pub fn clebsch_gordan(
    two_j1: u32,
    two_m1: i32,
    two_j2: u32,
    two_m2: i32,
    two_jj: u32,
    two_mm: i32,
) -> f64 {
    let (j1, j2, jj) = (two_j1 as i64, two_j2 as i64, two_jj as i64);
    let (m1, m2, mm) = (two_m1 as i64, two_m2 as i64, two_mm as i64);
    if m1 + m2 != mm
        || m1.abs() > j1
        || m2.abs() > j2
        || mm.abs() > jj
        || (j1 + m1) % 2 != 0
        || (j2 + m2) % 2 != 0
        || (jj + mm) % 2 != 0
        || (j1 + j2 + jj) % 2 != 0
        || jj > j1 + j2
        || jj < (j1 - j2).abs()
    {
        return 0.0;
    }
    // Undouble: every combination below is an integer.
    let a1 = (j1 + j2 - jj) / 2;
    let a2 = (j1 - m1) / 2;
    let a3 = (j2 + m2) / 2;
    let b1 = (jj - j2 + m1) / 2;
    let b2 = (jj - j1 - m2) / 2;
    let k_min = 0.max(-b1).max(-b2);
    let k_max = a1.min(a2).min(a3);
    if k_min > k_max {
        return 0.0;
    }

    let ln_pref = 0.5
        * ((jj as f64 + 1.0).ln()
            + ln_fact_i((jj + j1 - j2) / 2)
            + ln_fact_i((jj - j1 + j2) / 2)
            + ln_fact_i(a1)
            - ln_fact_i((j1 + j2 + jj) / 2 + 1)
            + ln_fact_i((jj + mm) / 2)
            + ln_fact_i((jj - mm) / 2)
            + ln_fact_i((j1 - m1) / 2)
            + ln_fact_i((j1 + m1) / 2)
            + ln_fact_i((j2 - m2) / 2)
            + ln_fact_i((j2 + m2) / 2));
    let k = k_min;
    let ln_first = -(ln_fact_i(k)
        + ln_fact_i(a1 - k)
        + ln_fact_i(a2 - k)
        + ln_fact_i(a3 - k)
        + ln_fact_i(b1 + k)
        + ln_fact_i(b2 + k));

    let mut term = DoubleDouble::new(1.0);
    let mut sum = term;
    for k in k_min..k_max {
        let num = ((a1 - k) * (a2 - k) * (a3 - k)) as f64;
        let den = ((k + 1) * (b1 + k + 1) * (b2 + k + 1)) as f64;
        term = -term.mul_f64(num).div_f64(den);
        sum = sum + term;
    }
    let s = sum.to_f64();
    if s == 0.0 {
        return 0.0;
    }
    let sign = if k_min % 2 == 0 { 1.0 } else { -1.0 } * s.signum();
    sign * (ln_pref + ln_first + s.abs().ln()).exp()
}

type CgKey = (u32, u32);

struct CgCache {
    tables: HashMap<CgKey, Arc<Vec<f64>>>,
    entries: usize,
}

/// Cap on the number of cached coefficients (about 128 MiB).
const CG_CACHE_CAP: usize = 1 << 24;

static CG_CACHE: OnceLock<RwLock<CgCache>> = OnceLock::new();

/// Memoized table `<j m1 j m2 | l, m1+m2>` over all `(m1, m2)`, row-major,
/// for equal spins `j = two_j / 2`. Safe for concurrent lookup; once the
/// cache holds `CG_CACHE_CAP` coefficients new tables are computed but not kept.
pub fn cg_table(two_j: u32, l: u32) -> Arc<Vec<f64>> {
    let cache = CG_CACHE.get_or_init(|| {
        RwLock::new(CgCache {
            tables: HashMap::new(),
            entries: 0,
        })
    });
    if let Some(t) = cache
        .read()
        .expect("cg cache poisoned")
        .tables
        .get(&(two_j, l))
    {
        return Arc::clone(t);
    }
    let dim = two_j as usize + 1;
    let two_l = 2 * l;
    let mut table = vec![0.0; dim * dim];
    for i1 in 0..dim {
        let tm1 = 2 * i1 as i32 - two_j as i32;
        for i2 in 0..dim {
            let tm2 = 2 * i2 as i32 - two_j as i32;
            if (tm1 + tm2).unsigned_abs() <= two_l {
                table[i1 * dim + i2] = clebsch_gordan(two_j, tm1, two_j, tm2, two_l, tm1 + tm2);
            }
        }
    }
    let table = Arc::new(table);
    let mut w = cache.write().expect("cg cache poisoned");
    if let Some(t) = w.tables.get(&(two_j, l)) {
        return Arc::clone(t);
    }
    if w.entries + table.len() <= CG_CACHE_CAP {
        w.entries += table.len();
        w.tables.insert((two_j, l), Arc::clone(&table));
    }
    table
}

/// Amplitudes over `(l, m)`, `l = 0..n`, `|m| <= l`, indexed `l^2 + l + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalAmplitudes {
    pub n: u32,
    pub coeffs: Vec<Complex64>,
}

impl SphericalAmplitudes {
    pub fn index(l: u32, m: i32) -> usize {
        (l * l) as usize + (l as i32 + m) as usize
    }

    pub fn get(&self, l: u32, m: i32) -> Complex64 {
        self.coeffs[Self::index(l, m)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `c(l, m) = sum_{m1 + m2 = m} <j m1 j m2 | l m> A(m1, m2)`.
pub fn so4_to_spherical(amps: &AngularAmplitudes) -> SphericalAmplitudes {
    let n = amps.n;
    let two_j = n - 1;
    let dim = n as usize;
    let lin = amps.to_linear();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (n * n) as usize];
    for l in 0..n {
        let table = cg_table(two_j, l);
        for i1 in 0..dim {
            for i2 in 0..dim {
                let cg = table[i1 * dim + i2];
                if cg == 0.0 {
                    continue;
                }
                let m = i1 as i32 + i2 as i32 - two_j as i32;
                coeffs[SphericalAmplitudes::index(l, m)] += lin[i1 * dim + i2] * cg;
            }
        }
    }
    SphericalAmplitudes { n, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    /// Independent oracle: the `J^2` eigenvector in the uncoupled basis at
    /// fixed `M` (a tridiagonal problem in `m1`), with the sign fixed by the
    /// Condon-Shortley rule.
    fn cg_recursion_vector(two_j1: u32, two_j2: u32, two_jj: u32, two_mm: i32) -> Vec<(i32, f64)> {
        let (j1, j2, jj) = (
            two_j1 as f64 / 2.0,
            two_j2 as f64 / 2.0,
            two_jj as f64 / 2.0,
        );
        let mm = two_mm as f64 / 2.0;
        let m1_lo = (-j1).max(mm - j2);
        let m1_hi = j1.min(mm + j2);
        let count = (m1_hi - m1_lo).round() as usize + 1;
        let m1s: Vec<f64> = (0..count).map(|i| m1_lo + i as f64).collect();
        let diag = |m1: f64| {
            let m2 = mm - m1;
            j1 * (j1 + 1.0) + j2 * (j2 + 1.0) + 2.0 * m1 * m2 - jj * (jj + 1.0)
        };
        // coupling between m1 and m1 + 1
        let off = |m1: f64| {
            let m2 = mm - m1;
            ((j1 * (j1 + 1.0) - m1 * (m1 + 1.0)) * (j2 * (j2 + 1.0) - m2 * (m2 - 1.0))).sqrt()
        };
        // Inverse iteration on the shifted tridiagonal matrix; the wanted
        // eigenvalue is 0 and its neighbours are at least 2 away.
        let shift = 1e-9;
        let mut mat = vec![vec![0.0; count]; count];
        for i in 0..count {
            mat[i][i] = diag(m1s[i]) - shift;
            if i + 1 < count {
                mat[i][i + 1] = off(m1s[i]);
                mat[i + 1][i] = off(m1s[i]);
            }
        }
        let mut v: Vec<f64> = (0..count).map(|i| 1.0 + 0.01 * i as f64).collect();
        for _ in 0..3 {
            v = dense_solve(mat.clone(), v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        // Condon-Shortley: <j1 j1 j2 m2 | J M> > 0, and by exchange symmetry the
        // m2 = j2 component carries (-1)^{j1+j2-J}. Below both, reflect M.
        let phase = if ((two_j1 + two_j2 - two_jj) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let want_sign_at = |idx: usize, sign: f64, v: &mut Vec<f64>| {
            if v[idx].signum() != sign {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        };
        if mm - j1 >= -j2 {
            want_sign_at(count - 1, 1.0, &mut v);
        } else if mm - j2 >= -j1 {
            want_sign_at(0, phase, &mut v);
        } else {
            let mirror = cg_recursion_vector(two_j1, two_j2, two_jj, -two_mm);
            let partner = mirror
                .iter()
                .find(|(t, _)| *t == -((2.0 * m1_lo).round() as i32))
                .unwrap()
                .1
                * phase;
            want_sign_at(0, partner.signum(), &mut v);
        }
        m1s.iter()
            .zip(v)
            .map(|(m1, x)| ((2.0 * m1).round() as i32, x))
            .collect()
    }

    #[test]
    fn su2_fiducial_and_small_cases() {
        for two_j in [0u32, 1, 4, 9] {
            let a = su2_amplitudes_linear(two_j, c(0.0, 0.0));
            assert_eq!(a[0], c(1.0, 0.0));
            assert!(a[1..].iter().all(|x| x.norm() == 0.0));
        }
        let a = su2_amplitudes_linear(1, c(1.0, 0.0));
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let a = su2_amplitudes_linear(2, c(0.0, 1.0));
        let mags: Vec<f64> = a.iter().map(|x| x.norm()).collect();
        assert!((mags[0] - 0.5).abs() < 1e-15);
        assert!((mags[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((mags[2] - 0.5).abs() < 1e-15);
        // phases i^{j+m}
        assert!((a[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((a[2] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(stereographic(0.0, 1.3).unwrap().norm(), 0.0);
        assert!((stereographic(PI / 2.0, 0.0).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((stereographic(PI / 2.0, PI / 2.0).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(stereographic(PI, 0.0).is_err());
        assert!(stereographic(-0.1, 0.0).is_err());
    }

    #[test]
    fn so4_examples() {
        let p = AngularParams::new(c(0.3, -2.0), c(5.0, 1.0)).unwrap();
        let a = so4_amplitudes(1, &p).unwrap();
        assert_eq!(a.amps.len(), 1);
        assert!((a.amps[0].to_complex() - c(1.0, 0.0)).norm() < 1e-15);

        let a = so4_amplitudes(2, &AngularParams::fiducial()).unwrap();
        assert!((a.get(0, 0).to_complex() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(a.amps[1..].iter().all(|x| x.is_zero()));

        let p = AngularParams::new(c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        let a = so4_amplitudes(3, &p).unwrap();
        let u = su2_amplitudes_linear(2, c(1.0, 0.0));
        let v = su2_amplitudes_linear(2, c(-1.0, 0.0));
        for i1 in 0..3 {
            for i2 in 0..3 {
                assert!((a.get(i1, i2).to_complex() - u[i1] * v[i2]).norm() < 1e-15);
            }
        }
        assert!(so4_amplitudes(0, &p).is_err());
        assert!(AngularParams::new(c(f64::NAN, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn cg_examples() {
        assert!((clebsch_gordan(1, 1, 1, -1, 2, 0) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((clebsch_gordan(1, -1, 1, 1, 0, 0) + FRAC_1_SQRT_2).abs() < 1e-15);
        for two_j in 0..=20u32 {
            let tj = two_j as i32;
            let v = clebsch_gordan(two_j, tj, two_j, tj, 2 * two_j, 2 * tj);
            assert!((v - 1.0).abs() < 1e-14, "2j={two_j}");
        }
        // selection rules
        assert_eq!(clebsch_gordan(2, 2, 2, 0, 2, 0), 0.0);
        assert_eq!(clebsch_gordan(2, 2, 2, 2, 2, 4), 0.0);
        assert_eq!(clebsch_gordan(2, 0, 2, 0, 6, 0), 0.0);
        assert_eq!(clebsch_gordan(2, 0, 2, 0, 2, 0), 0.0); // parity zero of <1 0 1 0|1 0>
    }

    #[test]
    fn cg_matches_recursion_oracle() {
        let cases: &[(u32, u32)] = &[
            (1, 1),
            (2, 2),
            (3, 3),
            (5, 3),
            (4, 1),
            (7, 7),
            (10, 6),
            (19, 19),
            (40, 40),
        ];
        for &(tj1, tj2) in cases {
            let mut tjj = (tj1 as i32 - tj2 as i32).unsigned_abs();
            while tjj <= tj1 + tj2 {
                let mut tmm = -(tjj as i32);
                while tmm <= tjj as i32 {
                    for (tm1, want) in cg_recursion_vector(tj1, tj2, tjj, tmm) {
                        let got = clebsch_gordan(tj1, tm1, tj2, tmm - tm1, tjj, tmm);
                        assert!(
                            (got - want).abs() < 1e-11,
                            "<{tj1}/2 {tm1}/2 {tj2}/2 {}/2 | {tjj}/2 {tmm}/2>: {got} vs {want}",
                            tmm - tm1
                        );
                    }
                    tmm += 2;
                }
                tjj += 2;
            }
        }
    }

    #[test]
    fn cg_tables_are_orthogonal() {
        for two_j in [1u32, 4, 9] {
            let dim = two_j as usize + 1;
            let tables: Vec<_> = (0..=two_j).map(|l| cg_table(two_j, l)).collect();
            for (l, a) in tables.iter().enumerate() {
                for (lp, b) in tables.iter().enumerate() {
                    for tm in (-(2 * l as i32)..=2 * l as i32).step_by(2) {
                        let dot: f64 = (0..dim)
                            .filter_map(|i1| {
                                let i2 = (tm + 2 * two_j as i32 - 2 * i1 as i32) / 2;
                                let ok = (0..dim as i32).contains(&i2);
                                ok.then(|| a[i1 * dim + i2 as usize] * b[i1 * dim + i2 as usize])
                            })
                            .sum();
                        let want = if l == lp { 1.0 } else { 0.0 };
                        if (tm.unsigned_abs() as usize) <= 2 * lp {
                            assert!(
                                (dot - want).abs() < 1e-12,
                                "2j={two_j} l={l} l'={lp} 2m={tm}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cg_high_spin_matches_oracle() {
        let two_j = 159u32;
        for &(l, m) in &[
            (0u32, 0i32),
            (1, 1),
            (40, -17),
            (100, 3),
            (158, -150),
            (159, 0),
        ] {
            let mut worst = 0.0f64;
            for (tm1, want) in cg_recursion_vector(two_j, two_j, 2 * l, 2 * m) {
                let got = clebsch_gordan(two_j, tm1, two_j, 2 * m - tm1, 2 * l, 2 * m);
                worst = worst.max((got - want).abs());
            }
            assert!(worst < 1e-12, "l={l} m={m}: {worst:e}");
        }
    }

    #[test]
    fn spherical_examples() {
        let p = AngularParams::new(c(0.7, 0.1), c(-0.2, 3.0)).unwrap();
        let s = so4_to_spherical(&so4_amplitudes(1, &p).unwrap());
        assert!((s.get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);

        let s = so4_to_spherical(&so4_amplitudes(2, &AngularParams::fiducial()).unwrap());
        assert!((s.get(1, -1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(s.get(0, 0).norm() < 1e-15);
    }

    #[test]
    fn orientation_is_antipodal() {
        for &(theta, phi) in &[(0.3, 0.0), (1.2, 2.0), (2.5, -1.0), (PI / 2.0, PI / 2.0)] {
            let z = stereographic(theta, phi).unwrap();
            let d = spin_direction(9, z);
            let n = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            for k in 0..3 {
                assert!((d[k] + n[k]).abs() < 1e-12, "theta={theta} phi={phi}");
            }
            let back = zeta_for_direction(d).unwrap();
            assert!((back - z).norm() < 1e-12 * (1.0 + z.norm()));
        }
        assert!(zeta_for_direction([0.0, 0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn su2_normalized(two_j in 0u32..=200, re in -1e3f64..1e3, im in -1e3f64..1e3) {
            let a = su2_amplitudes(two_j, c(re, im));
            let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12, "norm {}", norm);
        }

        #[test]
        fn overlap_closed_form(two_j in 0u32..=100, a in -3.0f64..3.0, b in -3.0f64..3.0,
                               c2 in -3.0f64..3.0, d in -3.0f64..3.0) {
            let za = c(a, b);
            let zb = c(c2, d);
            let ua = su2_amplitudes_linear(two_j, za);
            let ub = su2_amplitudes_linear(two_j, zb);
            let direct: Complex64 = ua.iter().zip(&ub).map(|(x, y)| x.conj() * y).sum();
            let closed = su2_overlap_closed_form(two_j, za, zb).to_complex();
            prop_assert!((direct - closed).norm() < 1e-10);
        }

        #[test]
        fn spherical_change_of_basis_is_unitary(n in 1u32..=40, seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut next = || {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let dim = n as usize;
            let amps: Vec<LogComplex> = (0..dim * dim)
                .map(|_| LogComplex::from_complex(c(next(), next())))
                .collect();
            let a = AngularAmplitudes { n, amps };
            let s = so4_to_spherical(&a);
            prop_assert!((s.norm_sqr() / a.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
