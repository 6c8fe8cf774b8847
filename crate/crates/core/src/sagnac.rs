//! Sagnac–Fizeau splitting of the counter-propagating modes, the two-mode
//! non-Hermitian spectrum and its exceptional point.
//!
//! Everything here is in configured Hz.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{SystemParams, SPEED_OF_LIGHT};

/// Relative width of the band around Δ_sag = κ classified as the exceptional point.
pub const EP_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SagnacShift {
    pub delta_sag: f64,
    /// Δ₊ = Δ_c + Δ_sag, seen by the clockwise mode.
    pub delta_plus: f64,
    /// Δ₋ = Δ_c − Δ_sag, seen by the counter-clockwise mode.
    pub delta_minus: f64,
}

impl SagnacShift {
    /// Shift with an arbitrary signed Δ_sag. Physical rotation only produces
    /// Δ_sag ≥ 0; the negative branch exists for mode-exchange checks.
    pub fn from_delta(p: &SystemParams, delta_sag: f64) -> Self {
        SagnacShift {
            delta_sag,
            delta_plus: p.delta_c + delta_sag,
            delta_minus: p.delta_c - delta_sag,
        }
    }

    pub fn mirrored(&self, p: &SystemParams) -> Self {
        Self::from_delta(p, -self.delta_sag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Anti-PT-symmetric: degenerate real parts, split decay rates.
    #[serde(rename = "APTS")]
    Apts,
    #[serde(rename = "EP")]
    Ep,
    /// Symmetry broken: split real parts, common decay rate.
    #[serde(rename = "APTB")]
    Aptb,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Apts => "APTS",
            Phase::Ep => "EP",
            Phase::Aptb => "APTB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
    pub phase: Phase,
}

/// Geometric factor Δ_sag/Ω = (n R ω_c / c)(1 − 1/n² − (λ/n) dn/dλ).
fn sagnac_slope(p: &SystemParams) -> f64 {
    let n = p.n_ref;
    let bracket = 1.0 - 1.0 / (n * n) - (p.lambda_0 / n) * p.dn_dlambda;
    n * p.radius * p.omega_c / SPEED_OF_LIGHT * bracket
}

pub fn sagnac_shift(p: &SystemParams, omega_spin: f64) -> SagnacShift {
    SagnacShift::from_delta(p, sagnac_slope(p) * omega_spin)
}

pub fn classify_phase(delta_sag: f64, kappa: f64) -> Phase {
    let tol = EP_REL_TOL * kappa;
    if (delta_sag.abs() - kappa).abs() <= tol {
        Phase::Ep
    } else if delta_sag.abs() < kappa {
        Phase::Apts
    } else {
        Phase::Aptb
    }
}

/// ω_± = Δ_c − iγ_c ± √(Δ_sag² − κ²). Below the exceptional point the root is
/// taken as +i√(κ² − Δ_sag²), so ω_+ is the slower-decaying branch.
pub fn eigenfrequencies(p: &SystemParams, shift: &SagnacShift) -> Eigenpair {
    let ds = shift.delta_sag.abs();
    let k = p.kappa;
    // factored to keep precision next to the branch point
    let disc = (ds - k) * (ds + k);
    let root = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    let centre = Complex64::new(p.delta_c, -p.gamma_c);
    Eigenpair {
        omega_plus: centre + root,
        omega_minus: centre - root,
        phase: classify_phase(shift.delta_sag, k),
    }
}

/// Spinning speed at which Δ_sag = κ.
pub fn ep_speed(p: &SystemParams) -> Result<f64> {
    let slope = sagnac_slope(p);
    if !(slope > 0.0) {
        return Err(Error::Domain(format!(
            "Sagnac factor (1 - 1/n^2 - (lambda/n) dn/dlambda) is non-positive for n = {}, dn/dlambda = {}",
            p.n_ref, p.dn_dlambda
        )));
    }
    Ok(p.kappa / slope)
}

/// The optical 2×2 Hamiltonian in the pump frame.
pub fn optical_hamiltonian(p: &SystemParams, shift: &SagnacShift) -> Matrix2<Complex64> {
    let i = Complex64::i();
    let loss = Complex64::new(0.0, -p.gamma_c);
    Matrix2::new(
        shift.delta_plus + loss,
        i * p.kappa,
        i * p.kappa,
        shift.delta_minus + loss,
    )
}

/// Max-norm of (PT) H (PT)⁻¹ + H with P the mode exchange and T complex
/// conjugation. Vanishes exactly when the Hamiltonian is anti-PT symmetric.
pub fn apt_defect(p: &SystemParams, shift: &SagnacShift) -> f64 {
    let h = optical_hamiltonian(p, shift);
    let swap = Matrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    // PT is its own inverse
    let conjugated = swap * h.map(|z| z.conj()) * swap;
    (conjugated + h).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
