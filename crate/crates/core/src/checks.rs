//! Self-checks run against a parameter set: each compares the production
//! path with an independent reference or an exact identity.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::observables::{delay_estimate_at, group_delay_at, isolation_ratio};
use crate::params::{drive_amplitudes, Direction, SystemParams};
use crate::probe::{
    coefficients_for_shift, oracle_solve, probe_amplitudes, transmission_for_shift, MVariant,
};
use crate::sagnac::{apt_defect, eigenfrequencies, ep_speed, sagnac_shift, SagnacShift};
use crate::steady::{bisect_displacement, solve_for_shift};

pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;
pub const BISECTION_TOL: f64 = 1e-10;
pub const ORACLE_TOL: f64 = 1e-8;
pub const RECIPROCITY_DB_TOL: f64 = 1e-9;
pub const RECIPROCITY_DELAY_TOL: f64 = 1e-12;
pub const BARE_TRANSMISSION_TOL: f64 = 1e-12;
pub const BARE_DELAY_TOL: f64 = 1e-6;
pub const RICHARDSON_TOL: f64 = 1e-6;
pub const MODE_EXCHANGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Reported only; never fails the suite.
    pub informational: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn bound(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: value <= tolerance,
            informational: false,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn report(name: &'static str, value: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: true,
            informational: true,
            value,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: impl std::fmt::Display) -> Self {
        CheckOutcome {
            name,
            passed: false,
            informational: false,
            value: f64::NAN,
            tolerance,
            detail: format!("error: {err}"),
        }
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Spinning speeds around the exceptional point (just 0 when Ω_EP is 0).
fn spin_samples(p: &SystemParams) -> Vec<f64> {
    match ep_speed(p) {
        Ok(w) if w > 0.0 => [0.0, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0].iter().map(|r| r * w).collect(),
        _ => vec![0.0],
    }
}

fn detuning_samples(p: &SystemParams) -> Vec<f64> {
    let span = 4.0 * p.gamma_c.max(p.kappa);
    linspace(-span, span, 17)
}

/// Same device with no optomechanics, no backscattering and γ₀ = γ_ex.
pub fn bare_cavity(p: &SystemParams) -> Result<SystemParams> {
    let mut s = p.to_spec();
    s.g_om = Some(0.0);
    s.kappa = Some(0.0);
    s.q_factor = None;
    s.gamma_0 = None;
    s.gamma_ex = None;
    s.gamma_c = Some(p.gamma_c);
    s.build()
}

/// Closed-form single-mode transmission 1 − γ_ex/(γ_c − iΔp).
pub fn bare_transmission(p: &SystemParams, delta_p: f64) -> Complex64 {
    1.0 - p.gamma_ex / Complex64::new(p.gamma_c, -delta_p)
}

/// Derivative of arg(1 − γ_ex/(γ_c − iΔ)) with respect to Δ, divided by the
/// rate scale: τ = [γ_c/(γ_c² + Δ²) − γ₀'/(γ₀'² + Δ²)]/s with γ₀' = γ_c − γ_ex.
pub fn bare_delay(p: &SystemParams, delta_p: f64) -> f64 {
    let g = p.gamma_c;
    let r = p.gamma_c - p.gamma_ex;
    let d2 = delta_p * delta_p;
    let inner = if r == 0.0 { 0.0 } else { r / (r * r + d2) };
    (g / (g * g + d2) - inner) / p.rate_scale()
}

pub fn run_checks(p: &SystemParams) -> Vec<CheckOutcome> {
    let mut out = vec![
        check_steady(p),
        check_bisection(p),
        check_trace(p),
        check_apt_defect(p),
    ];
    out.extend(check_oracle(p));
    out.push(check_mode_exchange(p));
    out.push(check_reciprocity(p));
    out.extend(check_bare_cavity(p));
    out.push(check_richardson(p));
    out.push(check_passivity(p));
    out.push(check_transparency(p));
    out
}

fn check_steady(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "steady-residual";
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        match solve_for_shift(p, &sagnac_shift(p, w), true) {
            Ok(s) => worst = worst.max(s.residual),
            Err(e) => return CheckOutcome::failed(NAME, STEADY_RESIDUAL_TOL, e),
        }
    }
    CheckOutcome::bound(NAME, worst, STEADY_RESIDUAL_TOL, "max normalised residual over spin samples")
}

fn check_bisection(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "steady-bisection";
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        let shift = sagnac_shift(p, w);
        let s = match solve_for_shift(p, &shift, true) {
            Ok(s) => s,
            Err(e) => return CheckOutcome::failed(NAME, BISECTION_TOL, e),
        };
        let x = bisect_displacement(p, &shift, true);
        let err = if x == 0.0 { s.x_bar.abs() } else { (s.x_bar - x).abs() / x.abs() };
        worst = worst.max(err);
    }
    CheckOutcome::bound(NAME, worst, BISECTION_TOL, "relative gap between fixed point and bisection root")
}

fn check_trace(p: &SystemParams) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        let e = eigenfrequencies(p, &sagnac_shift(p, w));
        let sum = e.omega_plus + e.omega_minus;
        let want = Complex64::new(2.0 * p.delta_c, -2.0 * p.gamma_c);
        worst = worst.max(rel(sum, want));
    }
    CheckOutcome::bound("eigenvalue-trace", worst, 1e-12, "relative error of ω₊ + ω₋ against 2(Δ_c − iγ_c)")
}

fn check_apt_defect(p: &SystemParams) -> CheckOutcome {
    let want = 2.0 * p.delta_c.abs();
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        let d = apt_defect(p, &sagnac_shift(p, w));
        worst = worst.max((d - want).abs() / want.max(1.0));
    }
    CheckOutcome::bound("apt-defect", worst, 1e-12, "relative error of the APT defect against 2|Δ_c|")
}

/// Closed form against the dense linear solve, plus the two reported
/// deviations: the literal M coefficient and bidirectional probe drive.
fn check_oracle(p: &SystemParams) -> Vec<CheckOutcome> {
    const NAME: &str = "oracle-equivalence";
    let eps_p = drive_amplitudes(p).1;
    let (mut sym, mut printed, mut both) = (0.0_f64, 0.0_f64, 0.0_f64);
    for w in spin_samples(p) {
        let shift = sagnac_shift(p, w);
        let s = match solve_for_shift(p, &shift, true) {
            Ok(s) => s,
            Err(e) => return vec![CheckOutcome::failed(NAME, ORACLE_TOL, e)],
        };
        for dp in detuning_samples(p) {
            let run = || -> Result<(f64, f64, f64)> {
                let c = coefficients_for_shift(p, &shift, dp, &s, MVariant::Symmetrized);
                let (f_cw, f_ccw) = probe_amplitudes(&c, eps_p)?;
                let c = coefficients_for_shift(p, &shift, dp, &s, MVariant::AsPrinted);
                let (l_cw, l_ccw) = probe_amplitudes(&c, eps_p)?;
                let (o_cw, _) = oracle_solve(p, &shift, dp, &s, eps_p, 0.0)?;
                let (_, o_ccw) = oracle_solve(p, &shift, dp, &s, 0.0, eps_p)?;
                let (b_cw, b_ccw) = oracle_solve(p, &shift, dp, &s, eps_p, eps_p)?;
                Ok((
                    rel(f_cw, o_cw).max(rel(f_ccw, o_ccw)),
                    rel(l_cw, o_cw).max(rel(l_ccw, o_ccw)),
                    rel(f_cw, b_cw).max(rel(f_ccw, b_ccw)),
                ))
            };
            match run() {
                Ok((a, b, c)) => {
                    sym = sym.max(a);
                    printed = printed.max(b);
                    both = both.max(c);
                }
                Err(e) => return vec![CheckOutcome::failed(NAME, ORACLE_TOL, e)],
            }
        }
    }
    vec![
        CheckOutcome::bound(NAME, sym, ORACLE_TOL, "closed form vs dense sideband solve, single-port drive"),
        CheckOutcome::report("as-printed-m-deviation", printed, "literal M coefficient vs dense solve"),
        CheckOutcome::report("both-ports-drive-deviation", both, "closed form vs dense solve with both ports driven"),
    ]
}

fn check_mode_exchange(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "mode-exchange";
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        let shift = sagnac_shift(p, w);
        let mirror = shift.mirrored(p);
        let run = || -> Result<f64> {
            let s = solve_for_shift(p, &shift, true)?;
            let m = solve_for_shift(p, &mirror, true)?;
            let mut worst: f64 = 0.0;
            for dp in detuning_samples(p) {
                let a = transmission_for_shift(p, &shift, dp, &s, MVariant::Symmetrized)?;
                let b = transmission_for_shift(p, &mirror, dp, &m, MVariant::Symmetrized)?;
                worst = worst.max(rel(a.t_cw, b.t_ccw)).max(rel(a.t_ccw, b.t_cw));
            }
            Ok(worst)
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return CheckOutcome::failed(NAME, MODE_EXCHANGE_TOL, e),
        }
    }
    CheckOutcome::bound(NAME, worst, MODE_EXCHANGE_TOL, "t_cw(Δ_sag) against t_ccw(−Δ_sag)")
}

fn check_reciprocity(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "reciprocity-at-rest";
    let shift = sagnac_shift(p, 0.0);
    let span = 5.0 * p.gamma_c.max(p.kappa);
    let run = || -> Result<(f64, f64)> {
        let s = solve_for_shift(p, &shift, true)?;
        let (mut iso, mut tau) = (0.0_f64, 0.0_f64);
        for dp in linspace(-span, span, 2000) {
            let r = transmission_for_shift(p, &shift, dp, &s, MVariant::Symmetrized)?;
            iso = iso.max(isolation_ratio(&r)?.abs());
            let a = group_delay_at(p, &shift, &s, dp, Direction::Cw, MVariant::Symmetrized)?;
            let b = group_delay_at(p, &shift, &s, dp, Direction::Ccw, MVariant::Symmetrized)?;
            tau = tau.max((a - b).abs());
        }
        Ok((iso, tau))
    };
    match run() {
        Ok((iso, tau)) => {
            let passed = iso <= RECIPROCITY_DB_TOL && tau <= RECIPROCITY_DELAY_TOL;
            CheckOutcome {
                name: NAME,
                passed,
                informational: false,
                value: iso,
                tolerance: RECIPROCITY_DB_TOL,
                detail: format!("max |I| = {iso:e} dB, max |τ_cw − τ_ccw| = {tau:e} s (tol {RECIPROCITY_DELAY_TOL:e})"),
            }
        }
        Err(e) => CheckOutcome::failed(NAME, RECIPROCITY_DB_TOL, e),
    }
}

fn check_bare_cavity(p: &SystemParams) -> Vec<CheckOutcome> {
    let q = match bare_cavity(p) {
        Ok(q) => q,
        Err(e) => return vec![CheckOutcome::failed("bare-cavity-transmission", BARE_TRANSMISSION_TOL, e)],
    };
    let shift = SagnacShift::from_delta(&q, 0.0);
    let span = 10.0 * q.gamma_c;
    let run = || -> Result<(f64, f64, f64)> {
        let s = solve_for_shift(&q, &shift, true)?;
        let (mut t_err, mut tau_err) = (0.0_f64, 0.0_f64);
        for dp in linspace(-span, span, 2001) {
            let r = transmission_for_shift(&q, &shift, dp, &s, MVariant::Symmetrized)?;
            t_err = t_err.max((r.big_t_cw - bare_transmission(&q, dp).norm_sqr()).abs());
            if dp.abs() >= 0.05 * q.gamma_c {
                let tau = group_delay_at(&q, &shift, &s, dp, Direction::Cw, MVariant::Symmetrized)?;
                let want = bare_delay(&q, dp);
                tau_err = tau_err.max((tau - want).abs() / want.abs());
            }
        }
        let dip = transmission_for_shift(&q, &shift, 0.0, &s, MVariant::Symmetrized)?.big_t_cw;
        Ok((t_err, dip, tau_err))
    };
    match run() {
        Ok((t_err, dip, tau_err)) => vec![
            CheckOutcome::bound(
                "bare-cavity-transmission",
                t_err.max(dip),
                BARE_TRANSMISSION_TOL,
                format!("max |T − T_bare| = {t_err:e}, T(0) = {dip:e}"),
            ),
            CheckOutcome::bound(
                "bare-cavity-delay",
                tau_err,
                BARE_DELAY_TOL,
                "relative error of τ against the analytic phase derivative, |Δp| ≥ 0.05 γ_c",
            ),
        ],
        Err(e) => vec![CheckOutcome::failed("bare-cavity-transmission", BARE_TRANSMISSION_TOL, e)],
    }
}

fn check_richardson(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "delay-step-refinement";
    let mut worst: f64 = 0.0;
    let mut unconverged = 0;
    for w in spin_samples(p) {
        let shift = sagnac_shift(p, w);
        let s = match solve_for_shift(p, &shift, true) {
            Ok(s) => s,
            Err(e) => return CheckOutcome::failed(NAME, RICHARDSON_TOL, e),
        };
        for dp in detuning_samples(p) {
            for dir in [Direction::Cw, Direction::Ccw] {
                match delay_estimate_at(p, &shift, &s, dp, dir, MVariant::Symmetrized) {
                    Ok(d) => {
                        if !d.converged {
                            unconverged += 1;
                        }
                        worst = worst.max(d.last_change);
                    }
                    Err(e) => return CheckOutcome::failed(NAME, RICHARDSON_TOL, e),
                }
            }
        }
    }
    let mut c = CheckOutcome::bound(
        NAME,
        worst,
        RICHARDSON_TOL,
        format!("relative change of τ on the last step halving; {unconverged} points hit the minimum step"),
    );
    c.passed &= unconverged == 0;
    c
}

/// Largest T seen; bounded by 1 only while κ ≤ γ₀/2.
fn check_passivity(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "max-transmission";
    let mut worst: f64 = 0.0;
    for w in spin_samples(p) {
        let shift = sagnac_shift(p, w);
        for pump_on in [true, false] {
            let Ok(s) = solve_for_shift(p, &shift, pump_on) else { continue };
            for dp in detuning_samples(p) {
                if let Ok(r) = transmission_for_shift(p, &shift, dp, &s, MVariant::Symmetrized) {
                    worst = worst.max(r.big_t_cw).max(r.big_t_ccw);
                }
            }
        }
    }
    let regime = if p.kappa <= 0.5 * p.gamma_0 { "passive" } else { "gain possible" };
    CheckOutcome::report(
        NAME,
        worst,
        format!("κ/(γ₀/2) = {:.3} ({regime})", p.kappa / (0.5 * p.gamma_0)),
    )
}

fn check_transparency(p: &SystemParams) -> CheckOutcome {
    const NAME: &str = "transparency-at-rest";
    let shift = sagnac_shift(p, 0.0);
    let t0 = |pump_on| -> Result<f64> {
        let s = solve_for_shift(p, &shift, pump_on)?;
        Ok(transmission_for_shift(p, &shift, 0.0, &s, MVariant::Symmetrized)?.big_t_cw)
    };
    match (t0(true), t0(false)) {
        (Ok(on), Ok(off)) => CheckOutcome::report(
            NAME,
            on - off,
            format!("T(Δp = 0) pump on {on:.4} minus pump off {off:.4}"),
        ),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::report(NAME, f64::NAN, format!("error: {e}")),
    }
}
