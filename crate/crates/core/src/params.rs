//! Physical parameters of the device and the knobs of a single evaluation.
//!
//! Every frequency and rate is stored exactly as configured, in cyclic Hz.
//! The dynamical equations (steady state, sideband response, transmission,
//! group delay) consume them through [`SystemParams::rate_scale`], which is
//! fixed by the [`RateConvention`] of the parameter set.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Relative tolerance for the loss-rate and quality-factor consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// How configured frequencies enter the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateConvention {
    /// Configured values are used as the rates of the equations of motion
    /// without conversion.
    AsQuoted,
    /// Every rate is multiplied by 2π before entering the equations of motion.
    Angular,
}

impl RateConvention {
    pub fn scale(self) -> f64 {
        match self {
            RateConvention::AsQuoted => 1.0,
            RateConvention::Angular => 2.0 * PI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateConvention::AsQuoted => "as-quoted",
            RateConvention::Angular => "angular",
        }
    }
}

impl fmt::Display for RateConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-quoted" => Ok(RateConvention::AsQuoted),
            "angular" => Ok(RateConvention::Angular),
            other => Err(Error::validation(
                "rate_convention",
                format!("`{other}` is not one of as-quoted, angular"),
            )),
        }
    }
}

/// Validated parameter set. Build through [`ParamSpec::build`] (or the
/// config loader) so the invariants below hold:
///
/// * `gamma_c == (gamma_0 + gamma_ex) / 2` exactly,
/// * `gamma_0 == omega_c / q_factor` to [`CONSISTENCY_TOL`] when a quality factor is given,
/// * rates, mass, radius, refractive index and wavelength are strictly positive,
///   `kappa`, `g_om` and both powers are non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub q_factor: Option<f64>,
    pub gamma_0: f64,
    pub gamma_ex: f64,
    pub gamma_c: f64,
    pub kappa: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    /// Effective mechanical mass, kg.
    pub mass: f64,
    /// Optomechanical coupling, Hz per metre.
    pub g_om: f64,
    /// Resonator radius, m.
    pub radius: f64,
    pub n_ref: f64,
    /// Material dispersion dn/dλ, 1/m.
    pub dn_dlambda: f64,
    /// Pump wavelength, m.
    pub lambda_0: f64,
    /// Pump power, W.
    pub p_pump: f64,
    /// Probe power, W.
    pub p_probe: f64,
    /// Pump detuning ω_c − ω_l, Hz.
    pub delta_c: f64,
    pub rate_convention: RateConvention,
}

impl SystemParams {
    /// Factor converting configured Hz into equation-of-motion rates.
    pub fn rate_scale(&self) -> f64 {
        self.rate_convention.scale()
    }

    /// Pump frequency ω_l = ω_c − Δ_c, Hz.
    pub fn omega_l(&self) -> f64 {
        self.omega_c - self.delta_c
    }

    /// Re-open this parameter set for editing. Every field is set explicitly,
    /// so `to_spec().build()` reproduces `self`.
    pub fn to_spec(&self) -> ParamSpec {
        ParamSpec {
            omega_c: Some(self.omega_c),
            q_factor: self.q_factor,
            gamma_0: Some(self.gamma_0),
            gamma_ex: Some(self.gamma_ex),
            gamma_c: Some(self.gamma_c),
            kappa: Some(self.kappa),
            omega_m: Some(self.omega_m),
            gamma_m: Some(self.gamma_m),
            mass: Some(self.mass),
            g_om: Some(self.g_om),
            radius: Some(self.radius),
            n_ref: Some(self.n_ref),
            dn_dlambda: Some(self.dn_dlambda),
            lambda_0: Some(self.lambda_0),
            p_pump: Some(self.p_pump),
            p_probe: Some(self.p_probe),
            delta_c: Some(self.delta_c),
            rate_convention: Some(self.rate_convention),
        }
    }
}

/// Every key accepted in a configuration file, in canonical output order.
pub const CONFIG_KEYS: &[&str] = &[
    "omega_c",
    "q_factor",
    "gamma_0",
    "gamma_ex",
    "gamma_c",
    "kappa",
    "omega_m",
    "gamma_m",
    "mass",
    "g_om",
    "radius",
    "n_ref",
    "dn_dlambda",
    "lambda_0",
    "p_pump",
    "p_probe",
    "delta_c",
    "rate_convention",
];

/// Partially specified parameter set, as read from a config file or
/// assembled programmatically. Unset fields take their defaults in
/// [`ParamSpec::build`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSpec {
    pub omega_c: Option<f64>,
    pub q_factor: Option<f64>,
    pub gamma_0: Option<f64>,
    pub gamma_ex: Option<f64>,
    pub gamma_c: Option<f64>,
    pub kappa: Option<f64>,
    pub omega_m: Option<f64>,
    pub gamma_m: Option<f64>,
    pub mass: Option<f64>,
    pub g_om: Option<f64>,
    pub radius: Option<f64>,
    pub n_ref: Option<f64>,
    pub dn_dlambda: Option<f64>,
    pub lambda_0: Option<f64>,
    pub p_pump: Option<f64>,
    pub p_probe: Option<f64>,
    pub delta_c: Option<f64>,
    pub rate_convention: Option<RateConvention>,
}

/// Refractive index of fused silica near 1550 nm.
pub const DEFAULT_N_REF: f64 = 1.444;

impl ParamSpec {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "omega_c" => &mut self.omega_c,
            "q_factor" => &mut self.q_factor,
            "gamma_0" => &mut self.gamma_0,
            "gamma_ex" => &mut self.gamma_ex,
            "gamma_c" => &mut self.gamma_c,
            "kappa" => &mut self.kappa,
            "omega_m" => &mut self.omega_m,
            "gamma_m" => &mut self.gamma_m,
            "mass" => &mut self.mass,
            "g_om" => &mut self.g_om,
            "radius" => &mut self.radius,
            "n_ref" => &mut self.n_ref,
            "dn_dlambda" => &mut self.dn_dlambda,
            "lambda_0" => &mut self.lambda_0,
            "p_pump" => &mut self.p_pump,
            "p_probe" => &mut self.p_probe,
            "delta_c" => &mut self.delta_c,
            _ => return None,
        })
    }

    /// Set a numeric field by its config key.
    pub fn set_value(&mut self, key: &str, value: f64) -> Result<&mut Self> {
        match self.slot(key) {
            Some(slot) => {
                *slot = Some(value);
                Ok(self)
            }
            None if key == "rate_convention" => Err(Error::validation(
                key,
                "expects one of as-quoted, angular, not a number",
            )),
            None => Err(Error::validation(key, "unknown key")),
        }
    }

    /// Set a field from its textual config value (numeric literals may carry
    /// an SI prefix suffix, e.g. `8.5k`).
    pub fn set(&mut self, key: &str, raw: &str) -> Result<&mut Self> {
        if key == "rate_convention" {
            self.rate_convention = Some(raw.trim().parse()?);
            return Ok(self);
        }
        if self.slot(key).is_none() {
            return Err(Error::validation(key, "unknown key"));
        }
        let value = parse_number(raw).ok_or_else(|| {
            Error::validation(key, format!("`{}` is not a numeric literal", raw.trim()))
        })?;
        self.set_value(key, value)
    }

    /// Clear a field so that it is derived again at build time.
    pub fn unset(&mut self, key: &str) -> Result<&mut Self> {
        if key == "rate_convention" {
            self.rate_convention = None;
            return Ok(self);
        }
        match self.slot(key) {
            Some(slot) => {
                *slot = None;
                Ok(self)
            }
            None => Err(Error::validation(key, "unknown key")),
        }
    }

    pub fn build(&self) -> Result<SystemParams> {
        let omega_c = required(self.omega_c, "omega_c")?;
        positive(omega_c, "omega_c")?;

        if let Some(q) = self.q_factor {
            positive(q, "q_factor")?;
        }
        let gamma_0_from_q = self.q_factor.map(|q| omega_c / q);
        let gamma_0_in = match (self.gamma_0, gamma_0_from_q) {
            (Some(g0), Some(gq)) => {
                if !rel_close(g0, gq) {
                    return Err(Error::validation(
                        "gamma_0",
                        format!("{g0:e} disagrees with omega_c/q_factor = {gq:e}"),
                    ));
                }
                Some(g0)
            }
            (g0, gq) => g0.or(gq),
        };

        let (gamma_0, gamma_ex) = resolve_losses(gamma_0_in, self.gamma_ex, self.gamma_c)?;
        positive(gamma_0, "gamma_0")?;
        positive(gamma_ex, "gamma_ex")?;
        let gamma_c = (gamma_0 + gamma_ex) / 2.0;
        if let Some(given) = self.gamma_c {
            if !rel_close(given, gamma_c) {
                return Err(Error::validation(
                    "gamma_c",
                    format!("{given:e} disagrees with (gamma_0 + gamma_ex)/2 = {gamma_c:e}"),
                ));
            }
        }

        let kappa = required(self.kappa, "kappa")?;
        non_negative(kappa, "kappa")?;
        let omega_m = required(self.omega_m, "omega_m")?;
        positive(omega_m, "omega_m")?;
        let gamma_m = required(self.gamma_m, "gamma_m")?;
        positive(gamma_m, "gamma_m")?;
        let mass = required(self.mass, "mass")?;
        positive(mass, "mass")?;
        let g_om = required(self.g_om, "g_om")?;
        non_negative(g_om, "g_om")?;
        let radius = required(self.radius, "radius")?;
        positive(radius, "radius")?;
        let n_ref = self.n_ref.unwrap_or(DEFAULT_N_REF);
        positive(n_ref, "n_ref")?;
        let dn_dlambda = self.dn_dlambda.unwrap_or(0.0);
        finite(dn_dlambda, "dn_dlambda")?;
        let lambda_0 = self.lambda_0.unwrap_or(SPEED_OF_LIGHT / omega_c);
        positive(lambda_0, "lambda_0")?;
        let p_pump = required(self.p_pump, "p_pump")?;
        non_negative(p_pump, "p_pump")?;
        let p_probe = self.p_probe.unwrap_or(p_pump / 100.0);
        non_negative(p_probe, "p_probe")?;
        let delta_c = self.delta_c.unwrap_or(omega_m);
        finite(delta_c, "delta_c")?;
        if delta_c >= omega_c {
            return Err(Error::validation(
                "delta_c",
                "pump frequency omega_c - delta_c must be positive",
            ));
        }

        Ok(SystemParams {
            omega_c,
            q_factor: self.q_factor,
            gamma_0,
            gamma_ex,
            gamma_c,
            kappa,
            omega_m,
            gamma_m,
            mass,
            g_om,
            radius,
            n_ref,
            dn_dlambda,
            lambda_0,
            p_pump,
            p_probe,
            delta_c,
            rate_convention: self.rate_convention.unwrap_or(RateConvention::AsQuoted),
        })
    }
}

/// Any two of (γ₀, γ_ex, γ_c) fix the third; γ_c alone means critical coupling.
fn resolve_losses(
    gamma_0: Option<f64>,
    gamma_ex: Option<f64>,
    gamma_c: Option<f64>,
) -> Result<(f64, f64)> {
    match (gamma_0, gamma_ex, gamma_c) {
        (Some(g0), Some(gex), _) => Ok((g0, gex)),
        (Some(g0), None, Some(gc)) => Ok((g0, 2.0 * gc - g0)),
        (None, Some(gex), Some(gc)) => Ok((2.0 * gc - gex, gex)),
        (None, None, Some(gc)) => Ok((gc, gc)),
        _ => Err(Error::validation(
            "gamma_c",
            "optical losses underdetermined: give gamma_c, or two of gamma_0/gamma_ex/gamma_c, or q_factor with gamma_ex",
        )),
    }
}

fn required(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::validation(key, "missing required key"))
}

fn finite(v: f64, key: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(key, format!("{v} is not finite")))
    }
}

fn positive(v: f64, key: &str) -> Result<()> {
    finite(v, key)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(key, format!("{v:e} must be strictly positive")))
    }
}

fn non_negative(v: f64, key: &str) -> Result<()> {
    finite(v, key)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(key, format!("{v:e} must be non-negative")))
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_TOL * a.abs().max(b.abs())
}

/// Parse a float literal with an optional trailing SI prefix.
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (idx, last) = s.char_indices().last()?;
    let factor = match last {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' | 'µ' | 'μ' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        'T' => 1e12,
        _ => return None,
    };
    let mantissa: f64 = s[..idx].trim_end().parse().ok()?;
    Some(mantissa * factor)
}

/// Probe incidence direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Left input, exciting the clockwise mode.
    Cw,
    /// Right input, exciting the counter-clockwise mode.
    Ccw,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cw" | "left" => Ok(Direction::Cw),
            "ccw" | "right" => Ok(Direction::Ccw),
            other => Err(Error::validation(
                "direction",
                format!("`{other}` is not one of cw, ccw"),
            )),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Cw => "cw",
            Direction::Ccw => "ccw",
        })
    }
}

/// One evaluation point: spinning speed, probe detuning, pump switch and
/// probe direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Rotation frequency Ω, Hz. The spinning sense is fixed; only Ω ≥ 0 is valid.
    pub omega_spin: f64,
    /// Probe detuning Δp = ω_p − ω_c, Hz.
    pub delta_p: f64,
    pub pump_on: bool,
    pub direction: Direction,
}

impl OperatingPoint {
    pub fn new(omega_spin: f64, delta_p: f64) -> Result<Self> {
        let op = OperatingPoint {
            omega_spin,
            delta_p,
            pump_on: true,
            direction: Direction::Cw,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn with_pump(mut self, pump_on: bool) -> Self {
        self.pump_on = pump_on;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        finite(self.omega_spin, "omega_spin")?;
        finite(self.delta_p, "delta_p")?;
        if self.omega_spin < 0.0 {
            return Err(Error::validation(
                "omega_spin",
                "spinning speed must be non-negative; reverse the probe direction instead",
            ));
        }
        Ok(())
    }

    /// Probe–pump detuning ξ = Δp + Δ_c, Hz.
    pub fn xi(&self, p: &SystemParams) -> f64 {
        self.delta_p + p.delta_c
    }
}

/// Pump and probe drive amplitudes (ε_l, ε_p) in equation-of-motion units.
/// The probe amplitude is taken at Δp = 0, i.e. ω_p = ω_c.
pub fn drive_amplitudes(p: &SystemParams) -> (f64, f64) {
    let s = p.rate_scale();
    let gamma_ex = s * p.gamma_ex;
    let eps_l = (gamma_ex * p.p_pump / (HBAR * s * p.omega_l())).sqrt();
    let eps_p = (gamma_ex * p.p_probe / (HBAR * s * p.omega_c)).sqrt();
    (eps_l, eps_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ParamSpec {
        let mut s = ParamSpec::new();
        s.omega_c = Some(193e12);
        s.gamma_c = Some(1.93e3);
        s.kappa = Some(8.5e3);
        s.omega_m = Some(63e6);
        s.gamma_m = Some(63.0);
        s.mass = Some(10e-15);
        s.g_om = Some(3.86e18);
        s.radius = Some(50e-6);
        s.p_pump = Some(10e-12);
        s
    }

    #[test]
    fn defaults_fill_derived_fields() {
        let p = base().build().unwrap();
        assert_eq!(p.delta_c, p.omega_m);
        assert_eq!(p.gamma_0, 1.93e3);
        assert_eq!(p.gamma_ex, 1.93e3);
        assert_eq!(p.gamma_c, 1.93e3);
        assert!((p.p_probe / 1e-13 - 1.0).abs() < 1e-15);
        assert_eq!(p.n_ref, DEFAULT_N_REF);
        assert_eq!(p.rate_convention, RateConvention::AsQuoted);
    }

    #[test]
    fn equal_split_gives_same_total() {
        let mut s = base();
        s.gamma_c = None;
        s.gamma_0 = Some(700.0);
        s.gamma_ex = Some(700.0);
        assert_eq!(s.build().unwrap().gamma_c, 700.0);
    }

    #[test]
    fn inconsistent_total_loss_is_rejected() {
        let mut s = base();
        s.gamma_0 = Some(1000.0);
        s.gamma_ex = Some(1000.0);
        let err = s.build().unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "gamma_c"));
    }

    #[test]
    fn quality_factor_fixes_intrinsic_loss() {
        let mut s = base();
        s.gamma_c = None;
        s.q_factor = Some(1e11);
        s.gamma_ex = Some(1930.0);
        let p = s.build().unwrap();
        assert_eq!(p.gamma_0, 1930.0);
        assert_eq!(p.gamma_c, 1930.0);

        s.gamma_0 = Some(2000.0);
        let err = s.build().unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "gamma_0"));
    }

    #[test]
    fn negative_rate_names_key() {
        let mut s = base();
        s.gamma_m = Some(-1.0);
        match s.build().unwrap_err() {
            Error::Validation { key, .. } => assert_eq!(key, "gamma_m"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let mut s = base();
        assert!(s.set("omega_x", "1").is_err());
        assert!(s.set_value("rate_convention", 1.0).is_err());
    }

    #[test]
    fn si_prefixes() {
        assert_eq!(parse_number("8.5k"), Some(8.5e3));
        assert_eq!(parse_number("10 p"), Some(10e-12));
        assert_eq!(parse_number("193T"), Some(193e12));
        assert_eq!(parse_number("63M"), Some(63e6));
        assert_eq!(parse_number("1.5m"), Some(1.5e-3));
        assert_eq!(parse_number("193e12"), Some(193e12));
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn drive_amplitude_scaling() {
        let p = base().build().unwrap();
        let mut s = p.to_spec();
        s.p_pump = Some(0.0);
        assert_eq!(drive_amplitudes(&s.build().unwrap()).0, 0.0);

        s.p_pump = Some(4.0 * p.p_pump);
        s.p_probe = Some(p.p_probe);
        let (e4, _) = drive_amplitudes(&s.build().unwrap());
        let (e1, _) = drive_amplitudes(&p);
        assert!((e4 / e1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn drive_amplitude_is_convention_independent() {
        let p = base().build().unwrap();
        let mut s = p.to_spec();
        s.rate_convention = Some(RateConvention::Angular);
        let a = drive_amplitudes(&p);
        let b = drive_amplitudes(&s.build().unwrap());
        assert!((a.0 / b.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_spin_rejected() {
        assert!(OperatingPoint::new(-1.0, 0.0).is_err());
        assert!(OperatingPoint::new(0.0, -5.0).is_ok());
    }
}
