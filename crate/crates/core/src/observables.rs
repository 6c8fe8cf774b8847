//! Isolation ratio and group delay from the complex transmission.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Direction, OperatingPoint, SystemParams};
use crate::probe::{transmission_for_shift, MVariant, ProbeResponse};
use crate::sagnac::{sagnac_shift, SagnacShift};
use crate::steady::{solve_for_shift, SteadyState};

/// |t| below which the transmission phase is considered undefined.
pub const DIP_FLOOR: f64 = 1e-12;
/// Agreement between successive step halvings that stops refinement.
pub const DELAY_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlowFast {
    Slow,
    Fast,
    Zero,
}

impl SlowFast {
    pub fn label(self) -> &'static str {
        match self {
            SlowFast::Slow => "slow",
            SlowFast::Fast => "fast",
            SlowFast::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub isolation_db: f64,
    pub tau_cw: f64,
    pub tau_ccw: f64,
    pub slow_fast_cw: SlowFast,
    pub slow_fast_ccw: SlowFast,
}

/// I = 10 log₁₀(T_cw / T_ccw), dB, as a difference of logs so that swapping
/// the rates negates it exactly.
pub fn isolation_ratio(r: &ProbeResponse) -> Result<f64> {
    if !(r.big_t_cw > 0.0 && r.big_t_ccw > 0.0) {
        return Err(Error::UndefinedIsolation {
            t_cw: r.big_t_cw,
            t_ccw: r.big_t_ccw,
        });
    }
    Ok(10.0 * (r.big_t_cw.log10() - r.big_t_ccw.log10()))
}

pub fn classify_slow_fast(tau: f64, zero_tol: f64) -> SlowFast {
    if tau > zero_tol {
        SlowFast::Slow
    } else if tau < -zero_tol {
        SlowFast::Fast
    } else {
        SlowFast::Zero
    }
}

/// Step schedule for the phase derivative, in configured Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub initial: f64,
    pub min: f64,
    pub rel_tol: f64,
}

impl StepControl {
    /// h₀ = max(10⁻⁴ γ_c, 10⁻³ Hz), refined down to 10⁻⁶ γ_c.
    pub fn for_params(p: &SystemParams) -> Self {
        StepControl {
            initial: (1e-4 * p.gamma_c).max(1e-3),
            min: 1e-6 * p.gamma_c,
            rel_tol: DELAY_REL_TOL,
        }
    }
}

/// Central difference of arg t at `x` with step `h`, using
/// arg(t(x+h)·conj(t(x−h))) so no unwrapping is needed for phase steps below π.
pub fn central_phase_difference<F>(t: &mut F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let hi = t(x + h)?;
    let lo = t(x - h)?;
    for (z, at) in [(hi, x + h), (lo, x - h)] {
        if z.norm() < DIP_FLOOR {
            return Err(Error::DipSingularity {
                delta_p: at,
                magnitude: z.norm(),
            });
        }
    }
    Ok((hi * lo.conj()).arg() / (2.0 * h))
}

/// Outcome of the step-halving refinement of a phase derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    /// Final estimate, seconds when the core rates are in 1/s.
    pub tau: f64,
    /// (step, raw central difference) for each step, in order.
    pub trace: Vec<(f64, f64)>,
    /// Relative change of the extrapolated estimate on the last halving.
    pub last_change: f64,
    /// Whether `last_change` reached the requested tolerance.
    pub converged: bool,
}

/// d arg t / dΔ from central differences at h, h/2, h/4, ... Successive
/// pairs are Richardson-combined as (4 D(h/2) − D(h))/3, and halving stops
/// once two combined values agree to `step.rel_tol` or the step reaches
/// `step.min`. `rate_scale` converts the configured detuning into
/// equation-of-motion units, so the result is in seconds when the core rates
/// are in 1/s.
pub fn refine_phase_derivative<F>(
    mut t: F,
    x: f64,
    step: StepControl,
    rate_scale: f64,
) -> Result<DelayEstimate>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let centre = t(x)?;
    if centre.norm() < DIP_FLOOR {
        return Err(Error::DipSingularity {
            delta_p: x,
            magnitude: centre.norm(),
        });
    }
    let mut h = step.initial;
    let mut raw = central_phase_difference(&mut t, x, h)?;
    let mut trace = vec![(h, raw / rate_scale)];
    let mut best = raw;
    let mut prev_combined: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    while h > step.min {
        h *= 0.5;
        let next = central_phase_difference(&mut t, x, h)?;
        trace.push((h, next / rate_scale));
        let combined = (4.0 * next - raw) / 3.0;
        raw = next;
        best = combined;
        if let Some(prev) = prev_combined {
            last_change = (combined - prev).abs() / combined.abs().max(f64::MIN_POSITIVE);
            if last_change <= step.rel_tol {
                converged = true;
                break;
            }
        }
        prev_combined = Some(combined);
    }
    Ok(DelayEstimate {
        tau: best / rate_scale,
        trace,
        last_change,
        converged,
    })
}

pub fn phase_derivative<F>(t: F, x: f64, step: StepControl, rate_scale: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    refine_phase_derivative(t, x, step, rate_scale).map(|d| d.tau)
}

/// Group delay τ_g = d arg t / dΔp for one direction, in seconds.
pub fn group_delay(
    p: &SystemParams,
    op: &OperatingPoint,
    direction: Direction,
    variant: MVariant,
) -> Result<f64> {
    op.validate()?;
    let shift = sagnac_shift(p, op.omega_spin);
    let s = solve_for_shift(p, &shift, op.pump_on)?;
    group_delay_at(p, &shift, &s, op.delta_p, direction, variant)
}

/// Group delay with the steady state supplied; it does not depend on Δp.
pub fn group_delay_at(
    p: &SystemParams,
    shift: &SagnacShift,
    s: &SteadyState,
    delta_p: f64,
    direction: Direction,
    variant: MVariant,
) -> Result<f64> {
    delay_estimate_at(p, shift, s, delta_p, direction, variant).map(|d| d.tau)
}

/// As [`group_delay_at`], keeping the refinement trace.
pub fn delay_estimate_at(
    p: &SystemParams,
    shift: &SagnacShift,
    s: &SteadyState,
    delta_p: f64,
    direction: Direction,
    variant: MVariant,
) -> Result<DelayEstimate> {
    let t = |dp: f64| transmission_for_shift(p, shift, dp, s, variant).map(|r| r.t(direction));
    refine_phase_derivative(t, delta_p, StepControl::for_params(p), p.rate_scale())
}

/// Isolation and both delays at one point. `tau_zero_tol` sets the
/// slow/fast dead band.
pub fn observe(
    p: &SystemParams,
    op: &OperatingPoint,
    variant: MVariant,
    tau_zero_tol: f64,
) -> Result<Observables> {
    op.validate()?;
    let shift = sagnac_shift(p, op.omega_spin);
    let s = solve_for_shift(p, &shift, op.pump_on)?;
    let r = transmission_for_shift(p, &shift, op.delta_p, &s, variant)?;
    let tau_cw = group_delay_at(p, &shift, &s, op.delta_p, Direction::Cw, variant)?;
    let tau_ccw = group_delay_at(p, &shift, &s, op.delta_p, Direction::Ccw, variant)?;
    Ok(Observables {
        isolation_db: isolation_ratio(&r)?,
        tau_cw,
        tau_ccw,
        slow_fast_cw: classify_slow_fast(tau_cw, tau_zero_tol),
        slow_fast_ccw: classify_slow_fast(tau_ccw, tau_zero_tol),
    })
}
