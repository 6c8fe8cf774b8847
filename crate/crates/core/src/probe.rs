//! Linear response of the pumped resonator to a weak probe.
//!
//! Fluctuations around the mean field are expanded in sidebands at e^{∓iξt}.
//! Eliminating the mechanics and the lower optical sideband leaves closed
//! forms for the upper-sideband amplitudes δa_cw+, δa_ccw+ built from the
//! coefficient block below. Naming follows the cofactor structure: `b_cw`
//! and `c_cw` carry the counter-clockwise detuning Δ₋ because they are the
//! cofactors that multiply a clockwise drive.
//!
//! [`sideband_oracle`] re-derives the same amplitudes by assembling the full
//! linearised system and solving it densely.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{drive_amplitudes, Direction, OperatingPoint, SystemParams, HBAR};
use crate::sagnac::{sagnac_shift, SagnacShift};
use crate::steady::SteadyState;

/// Denominators smaller than this multiple of machine epsilon times their
/// term scale are treated as poles.
const POLE_FACTOR: f64 = 1e3;

/// Which form of the M coefficient enters the response denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MVariant {
    /// Each photon-number term pairs the B and C cofactors of the same mode:
    /// (B_cw V₂ − C_cw V₁)|ā_cw|² + (B_ccw V₂ − C_ccw V₁)|ā_ccw|².
    #[default]
    Symmetrized,
    /// Literal form with C_ccw in both photon-number terms.
    AsPrinted,
}

impl MVariant {
    pub fn name(self) -> &'static str {
        match self {
            MVariant::Symmetrized => "symmetrized",
            MVariant::AsPrinted => "as-printed",
        }
    }
}

impl fmt::Display for MVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetrized" => Ok(MVariant::Symmetrized),
            "as-printed" => Ok(MVariant::AsPrinted),
            other => Err(Error::validation(
                "m_variant",
                format!("`{other}` is not one of symmetrized, as-printed"),
            )),
        }
    }
}

/// How the probe couples in the oracle's linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeDrive {
    /// Only the port selected by the operating point's direction is driven.
    Single,
    /// Both modes are driven with ε_p.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandCoefficients {
    /// Mechanical susceptibility A = m(ω_m² − ξ² − iξΓ_m).
    pub a_mech: Complex64,
    pub b_cw: Complex64,
    pub b_ccw: Complex64,
    /// Conjugates of C*_cw, C*_ccw.
    pub c_cw: Complex64,
    pub c_ccw: Complex64,
    pub v1: Complex64,
    pub v2: Complex64,
    pub n_cw: Complex64,
    pub n_ccw: Complex64,
    pub m_coef: Complex64,
    /// ħg², the prefactor of the optomechanical terms.
    pub hbar_g2: f64,
    pub variant: MVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub t_cw: Complex64,
    pub t_ccw: Complex64,
    pub big_t_cw: f64,
    pub big_t_ccw: f64,
}

impl ProbeResponse {
    fn new(t_cw: Complex64, t_ccw: Complex64) -> Self {
        ProbeResponse {
            t_cw,
            t_ccw,
            big_t_cw: t_cw.norm_sqr(),
            big_t_ccw: t_ccw.norm_sqr(),
        }
    }

    pub fn t(&self, direction: Direction) -> Complex64 {
        match direction {
            Direction::Cw => self.t_cw,
            Direction::Ccw => self.t_ccw,
        }
    }
}

pub fn sideband_coefficients(
    p: &SystemParams,
    op: &OperatingPoint,
    s: &SteadyState,
    variant: MVariant,
) -> SidebandCoefficients {
    coefficients_for_shift(p, &sagnac_shift(p, op.omega_spin), op.delta_p, s, variant)
}

/// Coefficient block for an explicit (possibly mirrored) Sagnac shift.
pub fn coefficients_for_shift(
    p: &SystemParams,
    shift: &SagnacShift,
    delta_p: f64,
    s: &SteadyState,
    variant: MVariant,
) -> SidebandCoefficients {
    let scale = p.rate_scale();
    let gamma = scale * p.gamma_c;
    let kappa = scale * p.kappa;
    let g = scale * p.g_om;
    let omega_m = scale * p.omega_m;
    let gamma_m = scale * p.gamma_m;
    let dp = scale * delta_p;
    let ds = scale * shift.delta_sag;
    let delta_c = scale * p.delta_c;
    let xi = dp + delta_c;
    let gx = g * s.x_bar;

    // ω_m − ξ and Δ∓ − ξ written without the large common offset Δ_c
    let mech_detuning = (omega_m - delta_c) - dp;
    let a_mech = p.mass * Complex64::new(mech_detuning * (omega_m + xi), -xi * gamma_m);

    let b_cw = Complex64::new(gamma, -dp - ds + gx);
    let b_ccw = Complex64::new(gamma, -dp + ds + gx);
    let c_cw = Complex64::new(gamma, -(2.0 * delta_c - ds + gx + dp));
    let c_ccw = Complex64::new(gamma, -(2.0 * delta_c + ds + gx + dp));

    let k2 = kappa * kappa;
    let v1 = b_cw * b_ccw - k2;
    let v2 = c_cw * c_ccw - k2;

    let n_cw_ph = s.photons_cw();
    let n_ccw_ph = s.photons_ccw();
    let cross = (s.a_cw.conj() * s.a_ccw + s.a_ccw.conj() * s.a_cw).re;

    let n_cw = c_cw * b_cw * n_cw_ph + (c_ccw * b_cw - v2) * n_ccw_ph + kappa * b_cw * cross;
    let n_ccw = c_ccw * b_ccw * n_ccw_ph + (c_cw * b_ccw - v2) * n_cw_ph + kappa * b_ccw * cross;

    let c_first = match variant {
        MVariant::Symmetrized => c_cw,
        MVariant::AsPrinted => c_ccw,
    };
    let m_coef = (b_cw * v2 - c_first * v1) * n_cw_ph
        + (b_ccw * v2 - c_ccw * v1) * n_ccw_ph
        + kappa * (v2 - v1) * cross;

    SidebandCoefficients {
        a_mech,
        b_cw,
        b_ccw,
        c_cw,
        c_ccw,
        v1,
        v2,
        n_cw,
        n_ccw,
        m_coef,
        hbar_g2: HBAR * g * g,
        variant,
    }
}

impl SidebandCoefficients {
    /// Response ratios δa_±/ε_p for both directions.
    fn ratios(&self) -> Result<(Complex64, Complex64)> {
        let i = Complex64::i();
        let mech = self.a_mech * self.v1 * self.v2;
        let opto = i * self.hbar_g2 * self.m_coef;
        let denom = mech - opto;
        let scale = mech.norm() + opto.norm();
        if !(denom.norm() > POLE_FACTOR * f64::EPSILON * scale) {
            return Err(Error::Singular {
                what: "probe response denominator",
                magnitude: denom.norm(),
            });
        }
        let num_cw = self.a_mech * self.b_cw * self.v2 + i * self.hbar_g2 * self.n_cw;
        let num_ccw = self.a_mech * self.b_ccw * self.v2 + i * self.hbar_g2 * self.n_ccw;
        Ok((num_cw / denom, num_ccw / denom))
    }
}

/// Upper-sideband amplitudes (δa_cw+, δa_ccw+), each for a probe entering
/// its own port with amplitude `eps_p`.
pub fn probe_amplitudes(c: &SidebandCoefficients, eps_p: f64) -> Result<(Complex64, Complex64)> {
    let (r_cw, r_ccw) = c.ratios()?;
    Ok((r_cw * eps_p, r_ccw * eps_p))
}

pub fn transmission(
    p: &SystemParams,
    op: &OperatingPoint,
    s: &SteadyState,
    variant: MVariant,
) -> Result<ProbeResponse> {
    transmission_for_shift(p, &sagnac_shift(p, op.omega_spin), op.delta_p, s, variant)
}

/// t = 1 − γ_ex δa₊/ε_p for both directions.
pub fn transmission_for_shift(
    p: &SystemParams,
    shift: &SagnacShift,
    delta_p: f64,
    s: &SteadyState,
    variant: MVariant,
) -> Result<ProbeResponse> {
    let c = coefficients_for_shift(p, shift, delta_p, s, variant);
    let (r_cw, r_ccw) = c.ratios()?;
    let gamma_ex = p.rate_scale() * p.gamma_ex;
    let one = Complex64::new(1.0, 0.0);
    Ok(ProbeResponse::new(one - gamma_ex * r_cw, one - gamma_ex * r_ccw))
}

/// Independent referee: linearise the equations of motion about the mean
/// field, insert the two-sideband ansatz and solve the resulting 5×5 system
/// for (δx₊, δa_cw+, δa_ccw+, δa_cw−*, δa_ccw−*) with a dense LU.
/// Returns (δa_cw+, δa_ccw+).
pub fn sideband_oracle(
    p: &SystemParams,
    op: &OperatingPoint,
    s: &SteadyState,
    drive: ProbeDrive,
) -> Result<(Complex64, Complex64)> {
    let shift = sagnac_shift(p, op.omega_spin);
    let eps_p = drive_amplitudes(p).1;
    let (drive_cw, drive_ccw) = match (drive, op.direction) {
        (ProbeDrive::Both, _) => (eps_p, eps_p),
        (ProbeDrive::Single, Direction::Cw) => (eps_p, 0.0),
        (ProbeDrive::Single, Direction::Ccw) => (0.0, eps_p),
    };
    oracle_solve(p, &shift, op.delta_p, s, drive_cw, drive_ccw)
}

pub(crate) fn oracle_solve(
    p: &SystemParams,
    shift: &SagnacShift,
    delta_p: f64,
    s: &SteadyState,
    drive_cw: f64,
    drive_ccw: f64,
) -> Result<(Complex64, Complex64)> {
    let sc = p.rate_scale();
    let i = Complex64::i();
    let c = |re: f64| Complex64::new(re, 0.0);
    let g = sc * p.g_om;
    let kappa = sc * p.kappa;
    let xi = sc * (delta_p + p.delta_c);
    let omega_m = sc * p.omega_m;
    let gamma_m = sc * p.gamma_m;
    let gx = g * s.x_bar;

    // d/dt δa_j = −d_j δa_j − i g ā_j δx + κ δa_k + drive
    let d_cw = Complex64::new(sc * p.gamma_c, sc * shift.delta_plus + gx);
    let d_ccw = Complex64::new(sc * p.gamma_c, sc * shift.delta_minus + gx);
    let (a1, a2) = (s.a_cw, s.a_ccw);
    let hg = HBAR * g;

    let mut m = DMatrix::<Complex64>::zeros(5, 5);
    let mut rhs = DVector::<Complex64>::zeros(5);
    // mechanics at e^{−iξt}: m(ω_m² − ξ² − iξΓ)δx₊ + ħg(ā₁*δa₁₊ + ā₁δa₁₋* + ā₂*δa₂₊ + ā₂δa₂₋*) = 0
    m[(0, 0)] = p.mass * Complex64::new(omega_m * omega_m - xi * xi, -xi * gamma_m);
    m[(0, 1)] = hg * a1.conj();
    m[(0, 2)] = hg * a2.conj();
    m[(0, 3)] = hg * a1;
    m[(0, 4)] = hg * a2;
    // upper optical sideband
    m[(1, 0)] = i * g * a1;
    m[(1, 1)] = d_cw - i * xi;
    m[(1, 2)] = c(-kappa);
    rhs[1] = c(drive_cw);
    m[(2, 0)] = i * g * a2;
    m[(2, 1)] = c(-kappa);
    m[(2, 2)] = d_ccw - i * xi;
    rhs[2] = c(drive_ccw);
    // conjugated lower optical sideband
    m[(3, 0)] = -i * g * a1.conj();
    m[(3, 3)] = d_cw.conj() - i * xi;
    m[(3, 4)] = c(-kappa);
    m[(4, 0)] = -i * g * a2.conj();
    m[(4, 3)] = c(-kappa);
    m[(4, 4)] = d_ccw.conj() - i * xi;

    let sol = m.lu().solve(&rhs).ok_or(Error::Singular {
        what: "linearised sideband system",
        magnitude: 0.0,
    })?;
    if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular {
            what: "linearised sideband system",
            magnitude: 0.0,
        });
    }
    Ok((sol[1], sol[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSpec;
    use crate::presets::Preset;
    use crate::steady::{solve_for_shift, solve_steady_state};

    fn with(f: impl FnOnce(&mut ParamSpec)) -> SystemParams {
        let mut s = Preset::MicrosphereNanostring.spec();
        f(&mut s);
        s.build().unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn steady(p: &SystemParams, op: &OperatingPoint) -> SteadyState {
        solve_steady_state(p, op).unwrap()
    }

    #[test]
    fn mechanical_resonance_is_imaginary() {
        let p = Preset::MicrosphereNanostring.params();
        // ξ = ω_m at Δp = ω_m − Δ_c = 0
        let op = OperatingPoint::new(0.0, 0.0).unwrap();
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        assert_eq!(c.a_mech.re, 0.0);
        let expect = -p.mass * p.omega_m * p.gamma_m;
        assert!((c.a_mech.im - expect).abs() <= 1e-14 * expect.abs());
    }

    #[test]
    fn pump_off_kills_optomechanical_terms() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(200.0, 50.0).unwrap().with_pump(false);
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!((c.n_cw, c.n_ccw, c.m_coef), (zero, zero, zero));
    }

    #[test]
    fn rest_makes_directions_identical() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(0.0, 120.0).unwrap();
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        assert_eq!(c.b_cw, c.b_ccw);
        assert_eq!(c.c_cw, c.c_ccw);
        assert_eq!(c.n_cw, c.n_ccw);
    }

    #[test]
    fn v_blocks_are_cofactor_determinants() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(300.0, -200.0).unwrap();
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        let k2 = p.kappa * p.kappa;
        assert_eq!(c.v1, c.b_cw * c.b_ccw - k2);
        assert_eq!(c.v2, c.c_cw * c.c_ccw - k2);
    }

    #[test]
    fn bare_cavity_amplitude() {
        let p = with(|s| s.kappa = Some(0.0));
        let op = OperatingPoint::new(0.0, 250.0).unwrap().with_pump(false);
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        let (a, b) = probe_amplitudes(&c, 2.0).unwrap();
        let expect = 2.0 / Complex64::new(p.gamma_c, -250.0);
        assert!(rel(a, expect) < 1e-14 && rel(b, expect) < 1e-14);
    }

    #[test]
    fn amplitudes_linear_in_probe() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(300.0, 40.0).unwrap();
        let c = sideband_coefficients(&p, &op, &steady(&p, &op), MVariant::Symmetrized);
        let (a1, b1) = probe_amplitudes(&c, 1.0).unwrap();
        let (a2, b2) = probe_amplitudes(&c, 2.0).unwrap();
        assert_eq!(a2, 2.0 * a1);
        assert_eq!(b2, 2.0 * b1);
    }

    #[test]
    fn critical_coupling_dip_is_dark() {
        let p = with(|s| {
            s.g_om = Some(0.0);
            s.kappa = Some(0.0);
        });
        let op = OperatingPoint::new(0.0, 0.0).unwrap();
        let r = transmission(&p, &op, &steady(&p, &op), MVariant::Symmetrized).unwrap();
        assert!(r.big_t_cw <= 1e-24 && r.big_t_ccw <= 1e-24);
    }

    #[test]
    fn far_detuned_probe_passes() {
        let p = with(|s| {
            s.g_om = Some(0.0);
            s.kappa = Some(0.0);
        });
        let op = OperatingPoint::new(0.0, 1e9).unwrap();
        let r = transmission(&p, &op, &steady(&p, &op), MVariant::Symmetrized).unwrap();
        assert!((r.big_t_cw - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reciprocal_at_rest() {
        let p = Preset::MicrosphereNanostring.params();
        for dp in [-800.0, -30.0, 0.0, 17.0, 600.0] {
            let op = OperatingPoint::new(0.0, dp).unwrap();
            let r = transmission(&p, &op, &steady(&p, &op), MVariant::Symmetrized).unwrap();
            assert_eq!(r.big_t_cw, r.big_t_ccw);
        }
    }

    #[test]
    fn transmission_independent_of_probe_power() {
        let p = Preset::MicrosphereNanostring.params();
        let q = with(|s| s.p_probe = Some(1e-20));
        let op = OperatingPoint::new(300.0, 100.0).unwrap();
        let a = transmission(&p, &op, &steady(&p, &op), MVariant::Symmetrized).unwrap();
        let b = transmission(&q, &op, &steady(&q, &op), MVariant::Symmetrized).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mirrored_shift_exchanges_directions() {
        let p = Preset::MicrosphereNanostring.params();
        let shift = sagnac_shift(&p, 320.0);
        let mirror = shift.mirrored(&p);
        let s = solve_for_shift(&p, &shift, true).unwrap();
        let sm = solve_for_shift(&p, &mirror, true).unwrap();
        for dp in [-500.0, -10.0, 0.0, 90.0, 700.0] {
            let a = transmission_for_shift(&p, &shift, dp, &s, MVariant::Symmetrized).unwrap();
            let b = transmission_for_shift(&p, &mirror, dp, &sm, MVariant::Symmetrized).unwrap();
            assert!(rel(a.t_cw, b.t_ccw) < 1e-10, "{dp}");
            assert!(rel(a.t_ccw, b.t_cw) < 1e-10, "{dp}");
        }
    }

    #[test]
    fn oracle_pump_off_matches_two_mode_closed_form() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(250.0, 130.0).unwrap().with_pump(false);
        let shift = sagnac_shift(&p, op.omega_spin);
        let (a, b) = sideband_oracle(&p, &op, &steady(&p, &op), ProbeDrive::Both).unwrap();
        let eps = drive_amplitudes(&p).1;
        let xi = op.delta_p + p.delta_c;
        let d1 = Complex64::new(p.gamma_c, shift.delta_plus - xi);
        let d2 = Complex64::new(p.gamma_c, shift.delta_minus - xi);
        let det = d1 * d2 - p.kappa * p.kappa;
        assert!(rel(a, (d2 + p.kappa) * eps / det) < 1e-12);
        assert!(rel(b, (d1 + p.kappa) * eps / det) < 1e-12);
    }

    #[test]
    fn oracle_without_coupling_matches_closed_form() {
        let p = with(|s| s.g_om = Some(0.0));
        for dir in [Direction::Cw, Direction::Ccw] {
            let op = OperatingPoint::new(400.0, -75.0).unwrap().with_direction(dir);
            let s = steady(&p, &op);
            let eps = drive_amplitudes(&p).1;
            let (o_cw, o_ccw) = sideband_oracle(&p, &op, &s, ProbeDrive::Single).unwrap();
            let c = sideband_coefficients(&p, &op, &s, MVariant::Symmetrized);
            let (f_cw, f_ccw) = probe_amplitudes(&c, eps).unwrap();
            match dir {
                Direction::Cw => assert!(rel(f_cw, o_cw) < 1e-10, "{:e}", rel(f_cw, o_cw)),
                Direction::Ccw => assert!(rel(f_ccw, o_ccw) < 1e-10),
            }
        }
    }

    #[test]
    fn oracle_matches_symmetrized_near_ep() {
        let p = Preset::MicrosphereNanostring.params();
        for (spin, dp) in [(351.0, 335.0), (351.0, -335.0), (340.0, 5.0), (700.0, -40.0)] {
            for dir in [Direction::Cw, Direction::Ccw] {
                let op = OperatingPoint::new(spin, dp).unwrap().with_direction(dir);
                let s = steady(&p, &op);
                let eps = drive_amplitudes(&p).1;
                let (o_cw, o_ccw) = sideband_oracle(&p, &op, &s, ProbeDrive::Single).unwrap();
                let c = sideband_coefficients(&p, &op, &s, MVariant::Symmetrized);
                let (f_cw, f_ccw) = probe_amplitudes(&c, eps).unwrap();
                let err = match dir {
                    Direction::Cw => rel(f_cw, o_cw),
                    Direction::Ccw => rel(f_ccw, o_ccw),
                };
                assert!(err < 1e-8, "{spin} {dp} {dir}: {err:e}");
            }
        }
    }

    #[test]
    fn as_printed_variant_deviates() {
        let p = Preset::MicrosphereNanostring.params();
        let op = OperatingPoint::new(300.0, 10.0).unwrap();
        let s = steady(&p, &op);
        let a = transmission(&p, &op, &s, MVariant::Symmetrized).unwrap();
        let b = transmission(&p, &op, &s, MVariant::AsPrinted).unwrap();
        assert_ne!(a.t_cw, b.t_cw);
    }

    #[test]
    fn variant_names_parse() {
        for v in [MVariant::Symmetrized, MVariant::AsPrinted] {
            assert_eq!(v.name().parse::<MVariant>().unwrap(), v);
        }
        assert!("other".parse::<MVariant>().is_err());
    }
}
