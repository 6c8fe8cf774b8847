//! Self-consistent mean field of the pumped resonator.
//!
//! The mean displacement x̄ shifts both optical resonances by g·x̄, and the
//! resulting intracavity photon numbers push back on x̄ through radiation
//! pressure. For fixed x̄ the two amplitudes follow from a 2×2 linear solve,
//! so the problem reduces to a scalar fixed point in x̄.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{drive_amplitudes, OperatingPoint, SystemParams, HBAR};
use crate::sagnac::{sagnac_shift, SagnacShift};

pub const MAX_ITER: usize = 10_000;
/// Relative step tolerance of the fixed-point iteration.
pub const STEP_TOL: f64 = 1e-12;
/// Absolute displacement floor (m) in the step test.
pub const X_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Mean displacement, m.
    pub x_bar: f64,
    pub a_cw: Complex64,
    pub a_ccw: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

impl SteadyState {
    pub fn photons_cw(&self) -> f64 {
        self.a_cw.norm_sqr()
    }

    pub fn photons_ccw(&self) -> f64 {
        self.a_ccw.norm_sqr()
    }
}

/// Mean-field equations in equation-of-motion units for one Sagnac shift.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MeanField {
    gamma_c: f64,
    kappa: f64,
    g: f64,
    delta_plus: f64,
    delta_minus: f64,
    eps_l: f64,
    /// ħg/(m ω_m²)
    pressure: f64,
    /// ħg/m
    force: f64,
    omega_m_sq: f64,
}

impl MeanField {
    pub(crate) fn new(p: &SystemParams, shift: &SagnacShift, pump_on: bool) -> Self {
        let s = p.rate_scale();
        let g = s * p.g_om;
        let omega_m = s * p.omega_m;
        let eps_l = if pump_on { drive_amplitudes(p).0 } else { 0.0 };
        MeanField {
            gamma_c: s * p.gamma_c,
            kappa: s * p.kappa,
            g,
            delta_plus: s * shift.delta_plus,
            delta_minus: s * shift.delta_minus,
            eps_l,
            pressure: HBAR * g / (p.mass * omega_m * omega_m),
            force: HBAR * g / p.mass,
            omega_m_sq: omega_m * omega_m,
        }
    }

    /// Loss-plus-detuning factors (iΔ± + i g x + γ_c) of the two modes.
    fn damping(&self, x: f64) -> (Complex64, Complex64) {
        let shift = self.g * x;
        (
            Complex64::new(self.gamma_c, self.delta_plus + shift),
            Complex64::new(self.gamma_c, self.delta_minus + shift),
        )
    }

    pub(crate) fn amplitudes(&self, x: f64) -> (Complex64, Complex64) {
        let (d_cw, d_ccw) = self.damping(x);
        let det = d_cw * d_ccw - self.kappa * self.kappa;
        let a_cw = (d_ccw + self.kappa) * self.eps_l / det;
        let a_ccw = (d_cw + self.kappa) * self.eps_l / det;
        (a_cw, a_ccw)
    }

    /// Radiation-pressure displacement for amplitudes evaluated at `x`.
    pub(crate) fn displacement_map(&self, x: f64) -> f64 {
        let (a_cw, a_ccw) = self.amplitudes(x);
        -self.pressure * (a_cw.norm_sqr() + a_ccw.norm_sqr())
    }

    /// Normalised max-norm of the time-derivative right-hand sides.
    fn residual(&self, x: f64, a_cw: Complex64, a_ccw: Complex64) -> f64 {
        let (d_cw, d_ccw) = self.damping(x);
        let r_cw = -d_cw * a_cw + self.kappa * a_ccw + self.eps_l;
        let r_ccw = -d_ccw * a_ccw + self.kappa * a_cw + self.eps_l;
        let optical_scale = if self.eps_l > 0.0 { self.eps_l } else { 1.0 };

        let push = self.force * (a_cw.norm_sqr() + a_ccw.norm_sqr());
        let r_x = -self.omega_m_sq * x - push;
        let mech_scale = push.max(self.omega_m_sq * x.abs());
        let r_mech = if mech_scale > 0.0 { r_x.abs() / mech_scale } else { r_x.abs() };

        (r_cw.norm() / optical_scale)
            .max(r_ccw.norm() / optical_scale)
            .max(r_mech)
    }
}

pub fn solve_steady_state(p: &SystemParams, op: &OperatingPoint) -> Result<SteadyState> {
    op.validate()?;
    solve_for_shift(p, &sagnac_shift(p, op.omega_spin), op.pump_on)
}

/// Damped fixed-point iteration x ← (1 − β)x + β F(x) from x = 0, with β
/// halved whenever the step length grows.
pub fn solve_for_shift(p: &SystemParams, shift: &SagnacShift, pump_on: bool) -> Result<SteadyState> {
    let field = MeanField::new(p, shift, pump_on);
    if field.eps_l == 0.0 {
        return Ok(SteadyState {
            x_bar: 0.0,
            a_cw: Complex64::new(0.0, 0.0),
            a_ccw: Complex64::new(0.0, 0.0),
            iterations: 1,
            residual: 0.0,
        });
    }

    let mut x = 0.0_f64;
    let mut beta = 1.0_f64;
    let mut last_step = f64::INFINITY;
    for k in 1..=MAX_ITER {
        let next = (1.0 - beta) * x + beta * field.displacement_map(x);
        if !next.is_finite() {
            break;
        }
        let step = (next - x).abs();
        let converged = step <= STEP_TOL * x.abs().max(X_FLOOR);
        x = next;
        if converged {
            let (a_cw, a_ccw) = field.amplitudes(x);
            return Ok(SteadyState {
                x_bar: x,
                a_cw,
                a_ccw,
                iterations: k,
                residual: field.residual(x, a_cw, a_ccw),
            });
        }
        if step > last_step {
            beta *= 0.5;
        }
        last_step = step;
    }
    let (a_cw, a_ccw) = field.amplitudes(x);
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        residual: field.residual(x, a_cw, a_ccw),
    })
}

pub fn steady_residual(p: &SystemParams, op: &OperatingPoint, s: &SteadyState) -> f64 {
    residual_for_shift(p, &sagnac_shift(p, op.omega_spin), op.pump_on, s)
}

pub fn residual_for_shift(p: &SystemParams, shift: &SagnacShift, pump_on: bool, s: &SteadyState) -> f64 {
    MeanField::new(p, shift, pump_on).residual(s.x_bar, s.a_cw, s.a_ccw)
}

/// Root of x − F(x) by bisection. Used as an independent referee for the
/// fixed-point solver; returns 0 when the pump is off.
pub fn bisect_displacement(p: &SystemParams, shift: &SagnacShift, pump_on: bool) -> f64 {
    let field = MeanField::new(p, shift, pump_on);
    let gap = |x: f64| x - field.displacement_map(x);
    let mut hi = 0.0_f64;
    if gap(hi) == 0.0 {
        return 0.0;
    }
    let mut lo = 2.0 * field.displacement_map(0.0);
    let mut expand = 0;
    while gap(lo) > 0.0 && expand < 200 {
        lo *= 2.0;
        expand += 1;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
