//! Rectangular (Ω, Δp) grids.
//!
//! Rows are ordered with Ω as the outer index. The steady state depends on Ω
//! only, so it is solved once per Ω and shared by every Δp cell of the row.
//! Rows are evaluated in parallel and written into fixed slots, so the result
//! does not depend on scheduling.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::write_config;
use crate::error::{Error, Result};
use crate::observables::{group_delay_at, isolation_ratio, StepControl, DELAY_REL_TOL, DIP_FLOOR};
use crate::params::{Direction, SystemParams};
use crate::probe::{transmission_for_shift, MVariant, ProbeResponse};
use crate::sagnac::{eigenfrequencies, ep_speed, sagnac_shift, Eigenpair, Phase, SagnacShift, EP_REL_TOL};
use crate::steady::{solve_for_shift, SteadyState, MAX_ITER, STEP_TOL, X_FLOOR};

/// Environment variable holding the worker count for sweeps.
pub const THREADS_ENV: &str = "APTOM_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    values: Vec<f64>,
}

impl Axis {
    /// `count` evenly spaced points with both endpoints included exactly.
    pub fn linear(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::validation("axis", "bounds must be finite"));
        }
        if count < 2 {
            return Err(Error::validation("axis", format!("count must be at least 2, got {count}")));
        }
        if !(min < max) {
            return Err(Error::validation("axis", format!("min {min} must be below max {max}")));
        }
        let last = (count - 1) as f64;
        let mut values: Vec<f64> = (0..count)
            .map(|k| min + (max - min) * (k as f64 / last))
            .collect();
        values[count - 1] = max;
        Ok(Axis { values })
    }

    pub fn fixed(value: f64) -> Result<Self> {
        Self::explicit(vec![value])
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("axis", "no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("axis", "values must be finite"));
        }
        Ok(Axis { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Complex t for the clockwise input.
    TCw,
    TCcw,
    TransCw,
    TransCcw,
    Isolation,
    /// Isolation divided by max |I| over its Δp row.
    IsolationNorm,
    TauCw,
    TauCcw,
    Eigvals,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::TCw,
        Quantity::TCcw,
        Quantity::TransCw,
        Quantity::TransCcw,
        Quantity::Isolation,
        Quantity::IsolationNorm,
        Quantity::TauCw,
        Quantity::TauCcw,
        Quantity::Eigvals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::TCw => "t_cw",
            Quantity::TCcw => "t_ccw",
            Quantity::TransCw => "T_cw",
            Quantity::TransCcw => "T_ccw",
            Quantity::Isolation => "I",
            Quantity::IsolationNorm => "I_norm",
            Quantity::TauCw => "tau_cw",
            Quantity::TauCcw => "tau_ccw",
            Quantity::Eigvals => "eigvals",
        }
    }

    /// Output columns contributed by this quantity.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::TCw => &["re_t_cw", "im_t_cw"],
            Quantity::TCcw => &["re_t_ccw", "im_t_ccw"],
            Quantity::TransCw => &["T_cw"],
            Quantity::TransCcw => &["T_ccw"],
            Quantity::Isolation => &["I_db"],
            Quantity::IsolationNorm => &["I_norm"],
            Quantity::TauCw => &["tau_cw_s"],
            Quantity::TauCcw => &["tau_ccw_s"],
            Quantity::Eigvals => &[
                "re_omega_plus_hz",
                "im_omega_plus_hz",
                "re_omega_minus_hz",
                "im_omega_minus_hz",
            ],
        }
    }

    fn needs_transmission(self) -> bool {
        !matches!(self, Quantity::Eigvals | Quantity::TauCw | Quantity::TauCcw)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Quantity::ALL.iter().map(|q| q.name()).collect();
                Error::validation("quantity", format!("`{s}` is not one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub omega_spin: Axis,
    pub delta_p: Axis,
    pub quantities: Vec<Quantity>,
    pub pump_on: bool,
    pub m_variant: MVariant,
}

impl SweepSpec {
    pub fn new(omega_spin: Axis, delta_p: Axis, quantities: Vec<Quantity>) -> Self {
        SweepSpec {
            omega_spin,
            delta_p,
            quantities,
            pump_on: true,
            m_variant: MVariant::default(),
        }
    }

    pub fn with_pump(mut self, pump_on: bool) -> Self {
        self.pump_on = pump_on;
        self
    }

    pub fn with_variant(mut self, variant: MVariant) -> Self {
        self.m_variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantities.is_empty() {
            return Err(Error::validation("quantities", "at least one quantity is required"));
        }
        if self.omega_spin.values().iter().any(|&w| w < 0.0) {
            return Err(Error::validation("omega_spin", "spinning speed must be non-negative"));
        }
        Ok(())
    }

    fn columns(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for q in &self.quantities {
            for c in q.columns() {
                if !out.contains(c) {
                    out.push(*c);
                }
            }
        }
        out
    }
}

/// Why a cell holds no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellErrorKind {
    NonConvergence,
    Singular,
    DipSingularity,
    UndefinedIsolation,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub kind: CellErrorKind,
    pub message: String,
}

impl From<&Error> for CellError {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::NonConvergence { .. } => CellErrorKind::NonConvergence,
            Error::Singular { .. } => CellErrorKind::Singular,
            Error::DipSingularity { .. } => CellErrorKind::DipSingularity,
            Error::UndefinedIsolation { .. } => CellErrorKind::UndefinedIsolation,
            _ => CellErrorKind::Other,
        };
        CellError {
            kind,
            message: e.to_string(),
        }
    }
}

pub type Cell = std::result::Result<f64, CellError>;

/// Solver settings and identity of the inputs, carried with every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub params_sha256: String,
    pub m_variant: MVariant,
    pub rate_convention: String,
    pub pump_on: bool,
    pub omega_ep_hz: Option<f64>,
    pub ep_rel_tol: f64,
    pub steady_step_tol: f64,
    pub steady_x_floor_m: f64,
    pub steady_max_iter: usize,
    pub delay_initial_step_hz: f64,
    pub delay_min_step_hz: f64,
    pub delay_rel_tol: f64,
    pub dip_floor: f64,
}

impl Provenance {
    pub fn new(p: &SystemParams, variant: MVariant, pump_on: bool) -> Self {
        let step = StepControl::for_params(p);
        Provenance {
            tool: "aptom".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            params_sha256: params_hash(p),
            m_variant: variant,
            rate_convention: p.rate_convention.name().to_string(),
            pump_on,
            omega_ep_hz: ep_speed(p).ok(),
            ep_rel_tol: EP_REL_TOL,
            steady_step_tol: STEP_TOL,
            steady_x_floor_m: X_FLOOR,
            steady_max_iter: MAX_ITER,
            delay_initial_step_hz: step.initial,
            delay_min_step_hz: step.min,
            delay_rel_tol: DELAY_REL_TOL,
            dip_floor: DIP_FLOOR,
        }
    }

    /// `(key, value)` pairs for a `#`-prefixed preamble.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("tool", format!("{} {}", self.tool, self.version)),
            ("params_sha256", self.params_sha256.clone()),
            ("m_variant", self.m_variant.name().to_string()),
            ("rate_convention", self.rate_convention.clone()),
            ("pump_on", self.pump_on.to_string()),
            (
                "omega_ep_hz",
                self.omega_ep_hz.map_or("undefined".to_string(), fmt_f64),
            ),
            ("ep_rel_tol", fmt_f64(self.ep_rel_tol)),
            ("steady_step_tol", fmt_f64(self.steady_step_tol)),
            ("steady_x_floor_m", fmt_f64(self.steady_x_floor_m)),
            ("steady_max_iter", self.steady_max_iter.to_string()),
            ("delay_initial_step_hz", fmt_f64(self.delay_initial_step_hz)),
            ("delay_min_step_hz", fmt_f64(self.delay_min_step_hz)),
            ("delay_rel_tol", fmt_f64(self.delay_rel_tol)),
            ("dip_floor", fmt_f64(self.dip_floor)),
        ]
    }
}

/// SHA-256 of the canonical config text.
pub fn params_hash(p: &SystemParams) -> String {
    Sha256::digest(write_config(p).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-Ω data shared by a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowInfo {
    pub omega_spin: f64,
    pub delta_sag: f64,
    pub phase: Phase,
    pub steady: std::result::Result<SteadyState, CellError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub params: SystemParams,
    pub spec: SweepSpec,
    pub provenance: Provenance,
    pub columns: Vec<&'static str>,
    /// One entry per Ω.
    pub rows: Vec<RowInfo>,
    /// `cells[c][i * n_dp + j]` holds column `c` at Ω index `i`, Δp index `j`.
    pub cells: Vec<Vec<Cell>>,
}

impl SweepResult {
    pub fn n_omega(&self) -> usize {
        self.spec.omega_spin.len()
    }

    pub fn n_delta_p(&self) -> usize {
        self.spec.delta_p.len()
    }

    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(&self.cells[k])
    }

    pub fn get(&self, name: &str, i_omega: usize, i_dp: usize) -> Option<&Cell> {
        self.column(name).map(|c| &c[i_omega * self.n_delta_p() + i_dp])
    }

    /// Column as plain numbers, errors mapped to NaN.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)
            .map(|c| c.iter().map(|v| *v.as_ref().unwrap_or(&f64::NAN)).collect())
    }

    pub fn errors(&self) -> impl Iterator<Item = (usize, usize, &'static str, &CellError)> + '_ {
        let n_dp = self.n_delta_p();
        self.columns.iter().zip(&self.cells).flat_map(move |(name, col)| {
            col.iter().enumerate().filter_map(move |(k, c)| {
                c.as_ref().err().map(|e| (k / n_dp, k % n_dp, *name, e))
            })
        })
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    /// Copy restricted to the given columns.
    pub fn select(&self, columns: &[&str]) -> Result<SweepResult> {
        let mut out = self.clone();
        out.columns.clear();
        out.cells.clear();
        for name in columns {
            let k = self
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::validation("column", format!("`{name}` not in result")))?;
            out.columns.push(self.columns[k]);
            out.cells.push(self.cells[k].clone());
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in self.provenance.entries() {
            writeln!(w, "# {k}: {v}")?;
        }
        for line in write_config(&self.params).lines() {
            writeln!(w, "# param {line}")?;
        }
        let (o, d) = (self.spec.omega_spin.values(), self.spec.delta_p.values());
        writeln!(w, "# omega_spin_hz: {} points in [{}, {}]", o.len(), fmt_f64(o[0]), fmt_f64(o[o.len() - 1]))?;
        writeln!(w, "# delta_p_hz: {} points in [{}, {}]", d.len(), fmt_f64(d[0]), fmt_f64(d[d.len() - 1]))?;
        writeln!(w, "# errors: {}", self.error_count())?;
        for (i, j, col, e) in self.errors() {
            writeln!(
                w,
                "# error: omega_spin_hz={} delta_p_hz={} column={} kind={}: {}",
                fmt_f64(o[i]),
                fmt_f64(d[j]),
                col,
                kind_name(e.kind),
                e.message
            )?;
        }
        write!(w, "omega_spin_hz,delta_p_hz")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w, ",phase")?;
        let n_dp = self.n_delta_p();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, dp) in d.iter().enumerate() {
                write!(w, "{},{}", fmt_f64(row.omega_spin), fmt_f64(*dp))?;
                for col in &self.cells {
                    match &col[i * n_dp + j] {
                        Ok(v) => write!(w, ",{}", fmt_f64(*v))?,
                        Err(_) => write!(w, ",NaN")?,
                    }
                }
                writeln!(w, ",{}", row.phase.label())?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Same content as the CSV: provenance, axes, one array per column
    /// (`null` for error cells) and the error list.
    pub fn to_json(&self) -> Value {
        let n_dp = self.n_delta_p();
        let columns: serde_json::Map<String, Value> = self
            .columns
            .iter()
            .zip(&self.cells)
            .map(|(name, col)| {
                let vals: Vec<Value> = col
                    .iter()
                    .map(|c| match c {
                        Ok(v) if v.is_finite() => json!(v),
                        _ => Value::Null,
                    })
                    .collect();
                (name.to_string(), Value::Array(vals))
            })
            .collect();
        let errors: Vec<Value> = self
            .errors()
            .map(|(i, j, col, e)| {
                json!({
                    "omega_index": i,
                    "delta_p_index": j,
                    "omega_spin_hz": self.rows[i].omega_spin,
                    "delta_p_hz": self.spec.delta_p.values()[j],
                    "column": col,
                    "kind": e.kind,
                    "message": e.message,
                })
            })
            .collect();
        json!({
            "provenance": self.provenance,
            "params": self.params,
            "layout": "row-major, omega_spin outer",
            "shape": [self.n_omega(), n_dp],
            "omega_spin_hz": self.spec.omega_spin.values(),
            "delta_p_hz": self.spec.delta_p.values(),
            "phase": self.rows.iter().map(|r| r.phase.label()).collect::<Vec<_>>(),
            "columns": columns,
            "errors": errors,
        })
    }
}

fn kind_name(k: CellErrorKind) -> &'static str {
    match k {
        CellErrorKind::NonConvergence => "non-convergence",
        CellErrorKind::Singular => "singular",
        CellErrorKind::DipSingularity => "dip-singularity",
        CellErrorKind::UndefinedIsolation => "undefined-isolation",
        CellErrorKind::Other => "other",
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:e}")
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn run_sweep(p: &SystemParams, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let columns = spec.columns();
    let rows: Vec<(RowInfo, Vec<Vec<Cell>>)> = match configured_threads() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation(THREADS_ENV, e.to_string()))?
            .install(|| evaluate_rows(p, spec, &columns)),
        None => evaluate_rows(p, spec, &columns),
    };

    let n_cells = spec.omega_spin.len() * spec.delta_p.len();
    let mut cells: Vec<Vec<Cell>> = columns.iter().map(|_| Vec::with_capacity(n_cells)).collect();
    let mut infos = Vec::with_capacity(rows.len());
    for (info, row_cells) in rows {
        for (dst, src) in cells.iter_mut().zip(row_cells) {
            dst.extend(src);
        }
        infos.push(info);
    }
    Ok(SweepResult {
        params: p.clone(),
        spec: spec.clone(),
        provenance: Provenance::new(p, spec.m_variant, spec.pump_on),
        columns,
        rows: infos,
        cells,
    })
}

fn evaluate_rows(p: &SystemParams, spec: &SweepSpec, columns: &[&'static str]) -> Vec<(RowInfo, Vec<Vec<Cell>>)> {
    spec.omega_spin
        .values()
        .par_iter()
        .map(|&omega| evaluate_row(p, spec, columns, omega))
        .collect()
}

fn evaluate_row(
    p: &SystemParams,
    spec: &SweepSpec,
    columns: &[&'static str],
    omega: f64,
) -> (RowInfo, Vec<Vec<Cell>>) {
    let shift = sagnac_shift(p, omega);
    let eig = eigenfrequencies(p, &shift);
    let steady = solve_for_shift(p, &shift, spec.pump_on);
    let needs_t = spec.quantities.iter().any(|q| q.needs_transmission());

    let mut out: Vec<Vec<Cell>> = columns.iter().map(|_| Vec::with_capacity(spec.delta_p.len())).collect();
    for &dp in spec.delta_p.values() {
        let response = match (&steady, needs_t) {
            (Ok(s), true) => Some(transmission_for_shift(p, &shift, dp, s, spec.m_variant).map_err(|e| CellError::from(&e))),
            _ => None,
        };
        for (k, name) in columns.iter().enumerate() {
            let cell = match &steady {
                Err(e) if !Quantity::Eigvals.columns().contains(name) => Err(CellError::from(e)),
                _ => cell_value(p, spec, &shift, &steady, &eig, response.as_ref(), dp, name),
            };
            out[k].push(cell);
        }
    }
    if let Some(k) = columns.iter().position(|c| *c == "I_norm") {
        normalize_row(&mut out[k]);
    }
    let info = RowInfo {
        omega_spin: omega,
        delta_sag: shift.delta_sag,
        phase: eig.phase,
        steady: steady.map_err(|e| CellError::from(&e)),
    };
    (info, out)
}

#[allow(clippy::too_many_arguments)]
fn cell_value(
    p: &SystemParams,
    spec: &SweepSpec,
    shift: &SagnacShift,
    steady: &Result<SteadyState>,
    eig: &Eigenpair,
    response: Option<&std::result::Result<ProbeResponse, CellError>>,
    dp: f64,
    name: &str,
) -> Cell {
    let resp = || response.expect("transmission computed for this column").clone();
    match name {
        "re_omega_plus_hz" => Ok(eig.omega_plus.re),
        "im_omega_plus_hz" => Ok(eig.omega_plus.im),
        "re_omega_minus_hz" => Ok(eig.omega_minus.re),
        "im_omega_minus_hz" => Ok(eig.omega_minus.im),
        "re_t_cw" => resp().map(|r| r.t_cw.re),
        "im_t_cw" => resp().map(|r| r.t_cw.im),
        "re_t_ccw" => resp().map(|r| r.t_ccw.re),
        "im_t_ccw" => resp().map(|r| r.t_ccw.im),
        "T_cw" => resp().map(|r| r.big_t_cw),
        "T_ccw" => resp().map(|r| r.big_t_ccw),
        "I_db" | "I_norm" => resp().and_then(|r| isolation_ratio(&r).map_err(|e| CellError::from(&e))),
        "tau_cw_s" | "tau_ccw_s" => {
            let dir = if name == "tau_cw_s" { Direction::Cw } else { Direction::Ccw };
            let s = steady.as_ref().expect("row steady state checked by caller");
            group_delay_at(p, shift, s, dp, dir, spec.m_variant).map_err(|e| CellError::from(&e))
        }
        other => unreachable!("unknown column {other}"),
    }
}

fn normalize_row(cells: &mut [Cell]) {
    let peak = cells
        .iter()
        .filter_map(|c| c.as_ref().ok())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in cells.iter_mut().flatten() {
            *v /= peak;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn micro() -> SystemParams {
        Preset::MicrosphereNanostring.params()
    }

    #[test]
    fn linear_axis_endpoints_exact() {
        let a = Axis::linear(-1e3, 1e3, 400).unwrap();
        assert_eq!(a.values()[0], -1e3);
        assert_eq!(a.values()[399], 1e3);
        assert!(a.values().windows(2).all(|w| w[1] > w[0]));
        let b = Axis::linear(0.0, 714.0, 7).unwrap();
        assert_eq!(b.values()[6], 714.0);
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::linear(0.0, 1.0, 1).is_err());
        assert!(Axis::linear(1.0, 1.0, 5).is_err());
        assert!(Axis::linear(2.0, 1.0, 5).is_err());
        assert!(Axis::explicit(vec![]).is_err());
        assert!(Axis::explicit(vec![f64::NAN]).is_err());
    }

    #[test]
    fn empty_quantities_rejected() {
        let spec = SweepSpec::new(Axis::fixed(0.0).unwrap(), Axis::fixed(0.0).unwrap(), vec![]);
        assert!(run_sweep(&micro(), &spec).is_err());
    }

    #[test]
    fn smallest_grid_is_finite() {
        let spec = SweepSpec::new(
            Axis::linear(0.0, 700.0, 2).unwrap(),
            Axis::linear(-1e3, 1e3, 2).unwrap(),
            Quantity::ALL.to_vec(),
        );
        let r = run_sweep(&micro(), &spec).unwrap();
        assert_eq!(r.error_count(), 0);
        for col in &r.cells {
            assert_eq!(col.len(), 4);
            assert!(col.iter().all(|c| c.as_ref().unwrap().is_finite()));
        }
    }

    #[test]
    fn cells_match_single_point_path() {
        let p = micro();
        let spec = SweepSpec::new(
            Axis::linear(100.0, 500.0, 3).unwrap(),
            Axis::linear(-400.0, 400.0, 5).unwrap(),
            vec![Quantity::Isolation, Quantity::TauCcw],
        );
        let r = run_sweep(&p, &spec).unwrap();
        let op = crate::params::OperatingPoint::new(300.0, 200.0).unwrap();
        let s = crate::steady::solve_steady_state(&p, &op).unwrap();
        let t = crate::probe::transmission(&p, &op, &s, MVariant::Symmetrized).unwrap();
        let i = isolation_ratio(&t).unwrap();
        assert_eq!(r.get("I_db", 1, 3).unwrap().as_ref().unwrap(), &i);
        let tau = crate::observables::group_delay(&p, &op, Direction::Ccw, MVariant::Symmetrized).unwrap();
        assert_eq!(r.get("tau_ccw_s", 1, 3).unwrap().as_ref().unwrap(), &tau);
    }

    #[test]
    fn normalized_rows_peak_at_one() {
        let spec = SweepSpec::new(
            Axis::explicit(vec![200.0, 350.0]).unwrap(),
            Axis::linear(-1e3, 1e3, 41).unwrap(),
            vec![Quantity::Isolation, Quantity::IsolationNorm],
        );
        let r = run_sweep(&micro(), &spec).unwrap();
        let norm = r.values("I_norm").unwrap();
        for row in norm.chunks(41) {
            let peak = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!((peak - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_is_deterministic_and_shaped() {
        let spec = SweepSpec::new(
            Axis::linear(0.0, 700.0, 4).unwrap(),
            Axis::linear(-500.0, 500.0, 3).unwrap(),
            vec![Quantity::TransCw, Quantity::Isolation, Quantity::Eigvals],
        );
        let a = run_sweep(&micro(), &spec).unwrap().to_csv_string();
        let b = run_sweep(&micro(), &spec).unwrap().to_csv_string();
        assert_eq!(a, b);
        let body: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(
            body[0],
            "omega_spin_hz,delta_p_hz,T_cw,I_db,re_omega_plus_hz,im_omega_plus_hz,re_omega_minus_hz,im_omega_minus_hz,phase"
        );
        assert_eq!(body.len(), 1 + 12);
        let first: Vec<&str> = body[1].split(',').collect();
        assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(first[1].parse::<f64>().unwrap(), -500.0);
        assert_eq!(*first.last().unwrap(), "APTS");
    }

    #[test]
    fn error_cells_are_marked() {
        // pump-off critical coupling at rest with κ = 0 has t = 0 at Δp = 0
        let mut s = micro().to_spec();
        s.kappa = Some(0.0);
        let p = s.build().unwrap();
        let spec = SweepSpec::new(
            Axis::fixed(0.0).unwrap(),
            Axis::explicit(vec![-100.0, 0.0, 100.0]).unwrap(),
            vec![Quantity::TransCw, Quantity::TauCw],
        )
        .with_pump(false);
        let r = run_sweep(&p, &spec).unwrap();
        assert_eq!(r.error_count(), 1);
        let (i, j, col, e) = r.errors().next().unwrap();
        assert_eq!((i, j, col, e.kind), (0, 1, "tau_cw_s", CellErrorKind::DipSingularity));
        let csv = r.to_csv_string();
        assert!(csv.contains("# error: omega_spin_hz=0e0 delta_p_hz=0e0 column=tau_cw_s kind=dip-singularity"));
        assert!(csv.lines().any(|l| l.starts_with("0e0,0e0,") && l.contains(",NaN,")));
        let js = r.to_json();
        assert!(js["columns"]["tau_cw_s"][1].is_null());
        assert_eq!(js["errors"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn hash_tracks_parameters() {
        let p = micro();
        let mut s = p.to_spec();
        s.kappa = Some(8.6e3);
        let q = s.build().unwrap();
        assert_eq!(params_hash(&p), params_hash(&p.clone()));
        assert_ne!(params_hash(&p), params_hash(&q));
        assert_eq!(params_hash(&p).len(), 64);
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("tau".parse::<Quantity>().is_err());
    }
}
