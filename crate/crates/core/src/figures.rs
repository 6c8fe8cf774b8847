//! Named figure datasets built from sweeps.
//!
//! Each figure is a bundle of panels; each panel is one [`SweepResult`]
//! written to `<panel>.csv`, plus a `manifest.json` describing the bundle.
//! Spinning speeds are laid out relative to the exceptional-point speed of
//! the supplied parameters.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::probe::MVariant;
use crate::sagnac::ep_speed;
use crate::sweep::{run_sweep, Axis, Quantity, SweepResult, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Eigenvalues and isolation.
    Fig2,
    /// Group delay.
    Fig3,
    /// Isolation and delay maps near the exceptional point.
    Fig4,
}

impl FigureId {
    pub const ALL: [FigureId; 3] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Spinning speeds, as multiples of Ω_EP, used for fixed-Ω cuts.
pub const CUT_RATIOS: [f64; 5] = [0.5, 0.9, 1.0, 1.1, 1.5];

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub heatmap_points: usize,
    pub line_points: usize,
    pub m_variant: MVariant,
    /// Half-width of the Δp window, Hz. `None` picks the per-figure default.
    pub delta_p_half_width: Option<f64>,
    /// Fixed probe detuning |Δp| of the line cuts versus Ω, Hz.
    pub landmark_delta_p: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            heatmap_points: 400,
            line_points: 2000,
            m_variant: MVariant::default(),
            delta_p_half_width: None,
            landmark_delta_p: 37e3,
        }
    }
}

impl FigureOptions {
    fn half_width(&self, id: FigureId) -> f64 {
        self.delta_p_half_width.unwrap_or(match id {
            FigureId::Fig2 | FigureId::Fig3 => 80e3,
            FigureId::Fig4 => 1e3,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub description: String,
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureBundle {
    pub figure: FigureId,
    pub omega_ep: f64,
    pub delta_p_half_width: f64,
    pub panels: Vec<Panel>,
}

impl FigureBundle {
    pub fn panel(&self, name: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.name == name)
    }

    pub fn manifest(&self) -> serde_json::Value {
        let panels: Vec<_> = self
            .panels
            .iter()
            .map(|p| {
                json!({
                    "name": p.name,
                    "file": format!("{}.csv", p.name),
                    "description": p.description,
                    "columns": p.result.columns,
                    "shape": [p.result.n_omega(), p.result.n_delta_p()],
                    "pump_on": p.result.spec.pump_on,
                    "errors": p.result.error_count(),
                })
            })
            .collect();
        json!({
            "figure": self.figure.name(),
            "omega_ep_hz": self.omega_ep,
            "delta_p_half_width_hz": self.delta_p_half_width,
            "axis_ranges_reconstructed": self.figure != FigureId::Fig4,
            "provenance": self.panels.first().map(|p| &p.result.provenance),
            "panels": panels,
        })
    }

    /// Write every panel CSV and `manifest.json` into `dir`, creating it.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for panel in &self.panels {
            let path = dir.join(format!("{}.csv", panel.name));
            let file = fs::File::create(&path)?;
            panel.result.write_csv(std::io::BufWriter::new(file))?;
            written.push(path);
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serialises");
        fs::write(&path, text + "\n")?;
        written.push(path);
        Ok(written)
    }
}

pub fn reproduce_figure(p: &SystemParams, id: FigureId, opts: &FigureOptions) -> Result<FigureBundle> {
    let w_ep = ep_speed(p)?;
    if !(w_ep > 0.0) {
        return Err(Error::Domain(
            "figure layouts need a positive exceptional-point speed (kappa > 0)".to_string(),
        ));
    }
    let hw = opts.half_width(id);
    if !(hw > 0.0) {
        return Err(Error::validation("delta_p_half_width", "must be positive"));
    }
    let spin_line = Axis::linear(0.0, 2.0 * w_ep, opts.line_points)?;
    let spin_map = Axis::linear(0.0, 2.0 * w_ep, opts.heatmap_points)?;
    let dp_line = Axis::linear(-hw, hw, opts.line_points)?;
    let dp_map = Axis::linear(-hw, hw, opts.heatmap_points)?;
    let cuts = Axis::explicit(CUT_RATIOS.iter().map(|r| r * w_ep).collect())?;
    let landmarks = Axis::explicit(vec![-opts.landmark_delta_p, opts.landmark_delta_p])?;

    let run = |omega: &Axis, dp: &Axis, q: Vec<Quantity>, pump_on: bool| {
        let spec = SweepSpec::new(omega.clone(), dp.clone(), q)
            .with_pump(pump_on)
            .with_variant(opts.m_variant);
        run_sweep(p, &spec)
    };
    let panel = |name: &str, description: &str, result: SweepResult| Panel {
        name: name.to_string(),
        description: description.to_string(),
        result,
    };
    let isolation = vec![Quantity::TransCw, Quantity::TransCcw, Quantity::Isolation, Quantity::IsolationNorm];
    let delays = vec![Quantity::TauCw, Quantity::TauCcw];

    let panels = match id {
        FigureId::Fig2 => vec![
            panel(
                "fig2ab_eigenvalues",
                "complex eigenfrequencies versus spinning speed",
                run(&spin_line, &Axis::fixed(0.0)?, vec![Quantity::Eigvals], true)?,
            ),
            panel(
                "fig2cd_isolation_pump_on",
                "isolation versus probe detuning at fixed spinning speeds, pump on",
                run(&cuts, &dp_line, isolation.clone(), true)?,
            ),
            panel(
                "fig2cd_isolation_pump_off",
                "isolation versus probe detuning at fixed spinning speeds, pump off",
                run(&cuts, &dp_line, isolation.clone(), false)?,
            ),
            panel(
                "fig2e_isolation_map",
                "isolation over probe detuning and spinning speed",
                run(&spin_map, &dp_map, vec![Quantity::Isolation], true)?,
            ),
            panel(
                "fig2f_isolation_vs_spin",
                "isolation versus spinning speed at the landmark detunings",
                run(&spin_line, &landmarks, isolation, true)?,
            ),
        ],
        FigureId::Fig3 => vec![
            panel(
                "fig3a_delay_cuts",
                "group delay versus probe detuning at fixed spinning speeds",
                run(&cuts, &dp_line, delays.clone(), true)?,
            ),
            panel(
                "fig3bc_delay_maps",
                "group delay of both inputs over probe detuning and spinning speed",
                run(&spin_map, &dp_map, delays.clone(), true)?,
            ),
            panel(
                "fig3de_delay_vs_spin",
                "group delay versus spinning speed at the landmark detunings",
                run(&spin_line, &landmarks, delays, true)?,
            ),
        ],
        FigureId::Fig4 => {
            let all = run(
                &spin_map,
                &dp_map,
                vec![Quantity::Isolation, Quantity::TauCw, Quantity::TauCcw],
                true,
            )?;
            vec![
                panel("fig4a_isolation_map", "isolation ratio map", all.select(&["I_db"])?),
                panel("fig4b_delay_cw_map", "group delay map, clockwise input", all.select(&["tau_cw_s"])?),
                panel("fig4c_delay_ccw_map", "group delay map, counter-clockwise input", all.select(&["tau_ccw_s"])?),
            ]
        }
    };
    Ok(FigureBundle {
        figure: id,
        omega_ep: w_ep,
        delta_p_half_width: hw,
        panels,
    })
}
