//! State descriptors, CSV traces and the binary grid format.
//!
//! Binary grid layout, all little-endian:
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 8    | magic `COHGRID1`                   |
//! | 8      | 8    | width, `f64`                       |
//! | 16     | 8    | samples per side, `u64`            |
//! | 24     | 8    | time `t`, `f64`                    |
//! | 32     | 16 n | `(re, im)` pairs, `f64`, row-major |
//!
//! Rows run over `y` (slowest), columns over `x`, both ascending from
//! `-width/2` to `width/2`.

use crate::error::{Error, Result};
use crate::position::{GridField, GridSpec};
use crate::state::{build_state, CoherentState};
use crate::su2::AngularParams;
use crate::weights::{WeightSpec, DEFAULT_TAIL_EPS};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const GRID_MAGIC: &[u8; 8] = b"COHGRID1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Stretched,
    Tabulated,
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_EPS
}

/// Everything needed to rebuild a state, plus a few display-only numbers.
///
/// `ln_s` is canonical; `s_display` is written for humans and ignored on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDescriptor {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_moments: Option<Vec<f64>>,
    pub ln_s: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub zeta1_re: f64,
    #[serde(default)]
    pub zeta1_im: f64,
    #[serde(default)]
    pub zeta2_re: f64,
    #[serde(default)]
    pub zeta2_im: f64,
    #[serde(default = "default_tail")]
    pub tail_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_display: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_principal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revival_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revival_ratio: Option<f64>,
}

/// `s = exp(ln_s)` as decimal text, valid far outside the `f64` range.
pub fn format_s(ln_s: f64) -> String {
    if ln_s == f64::NEG_INFINITY {
        return "0".into();
    }
    let log10 = ln_s / std::f64::consts::LN_10;
    let exp = log10.floor();
    let mant = 10f64.powf(log10 - exp);
    format!("{mant:.6}e{exp}")
}

impl StateDescriptor {
    pub fn new(weight: &WeightSpec, ln_s: f64, gamma: f64, angular: AngularParams) -> Self {
        let (family, alpha, log_moments) = match weight {
            WeightSpec::Exponential => (Family::Exponential, None, None),
            WeightSpec::StretchedExponential { alpha } => (Family::Stretched, Some(*alpha), None),
            WeightSpec::Tabulated { log_moments } => {
                (Family::Tabulated, None, Some(log_moments.clone()))
            }
        };
        StateDescriptor {
            family,
            alpha,
            log_moments,
            ln_s,
            gamma,
            zeta1_re: angular.zeta1.re,
            zeta1_im: angular.zeta1.im,
            zeta2_re: angular.zeta2.re,
            zeta2_im: angular.zeta2.im,
            tail_eps: DEFAULT_TAIL_EPS,
            s_display: Some(format_s(ln_s)),
            mean_principal: None,
            spread: None,
            revival_time: None,
            revival_ratio: None,
        }
    }

    pub fn from_state(state: &CoherentState) -> Self {
        let mut d = Self::new(
            state.weight(),
            state.ln_s(),
            state.gamma(),
            *state.angular(),
        );
        d.tail_eps = state.coeffs().tail_eps;
        d
    }

    pub fn weight(&self) -> Result<WeightSpec> {
        let w = match self.family {
            Family::Exponential => WeightSpec::Exponential,
            Family::Stretched => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::Descriptor("stretched family needs alpha".into()))?;
                WeightSpec::stretched(alpha)?
            }
            Family::Tabulated => {
                let m = self.log_moments.clone().ok_or_else(|| {
                    Error::Descriptor("tabulated family needs log_moments".into())
                })?;
                WeightSpec::tabulated(m)?
            }
        };
        w.validate()?;
        Ok(w)
    }

    pub fn angular(&self) -> Result<AngularParams> {
        AngularParams::new(
            Complex64::new(self.zeta1_re, self.zeta1_im),
            Complex64::new(self.zeta2_re, self.zeta2_im),
        )
    }

    pub fn build(&self) -> Result<CoherentState> {
        if self.ln_s.is_nan() || self.ln_s == f64::INFINITY {
            return Err(Error::Descriptor(format!("invalid ln_s = {}", self.ln_s)));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(Error::Descriptor(format!(
                "tail_eps must lie in (0, 1), got {}",
                self.tail_eps
            )));
        }
        build_state(
            &self.weight()?,
            self.ln_s,
            self.gamma,
            self.angular()?,
            self.tail_eps,
        )
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Descriptor(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Descriptor(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

/// Full-precision scientific notation (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_autocorr_csv<W: Write>(mut w: W, times: &[f64], values: &[Complex64]) -> Result<()> {
    writeln!(w, "t,re_A,im_A,abs_A,abs_A_sq")?;
    for (t, a) in times.iter().zip(values) {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(a.re),
            fmt_f64(a.im),
            fmt_f64(a.norm()),
            fmt_f64(a.norm_sqr())
        )?;
    }
    Ok(())
}

pub fn write_levels_csv<W: Write>(mut w: W, levels: &[(u64, f64)]) -> Result<()> {
    writeln!(w, "n,p_n")?;
    for (n, p) in levels {
        writeln!(w, "{n},{}", fmt_f64(*p))?;
    }
    Ok(())
}

pub fn write_moments_csv<W: Write>(mut w: W, moments: &[(u64, f64)]) -> Result<()> {
    writeln!(w, "n,ln_rho_n")?;
    for (n, m) in moments {
        writeln!(w, "{n},{}", fmt_f64(*m))?;
    }
    Ok(())
}

pub fn write_grid_csv<W: Write>(mut w: W, field: &GridField) -> Result<()> {
    writeln!(w, "x,y,abs_psi,re_psi,im_psi")?;
    let n = field.spec.samples;
    for iy in 0..n {
        let y = field.spec.coord(iy);
        for ix in 0..n {
            let v = field.at(ix, iy);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(field.spec.coord(ix)),
                fmt_f64(y),
                fmt_f64(v.norm()),
                fmt_f64(v.re),
                fmt_f64(v.im)
            )?;
        }
    }
    Ok(())
}

pub fn write_grid_binary<W: Write>(mut w: W, field: &GridField) -> Result<()> {
    w.write_all(GRID_MAGIC)?;
    w.write_all(&field.spec.width.to_le_bytes())?;
    w.write_all(&(field.spec.samples as u64).to_le_bytes())?;
    w.write_all(&field.t.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_8<R: Read>(r: &mut R) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_grid_binary<R: Read>(mut r: R) -> Result<GridField> {
    if &read_8(&mut r)? != GRID_MAGIC {
        return Err(Error::Descriptor("not a grid file (bad magic)".into()));
    }
    let width = f64::from_le_bytes(read_8(&mut r)?);
    let samples = u64::from_le_bytes(read_8(&mut r)?);
    let t = f64::from_le_bytes(read_8(&mut r)?);
    let samples = usize::try_from(samples)
        .map_err(|_| Error::Descriptor(format!("sample count {samples} too large")))?;
    let spec = GridSpec::new(width, samples)?;
    let count = samples
        .checked_mul(samples)
        .ok_or_else(|| Error::Descriptor("sample count overflows".into()))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_8(&mut r)?);
        let im = f64::from_le_bytes(read_8(&mut r)?);
        values.push(Complex64::new(re, im));
    }
    Ok(GridField { spec, t, values })
}
