use std::path::PathBuf;

use aptom_core::params::parse_number;
use aptom_core::sweep::Axis;
use aptom_core::{MVariant, Preset};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aptom",
    version,
    about = "Spinning optomechanical resonator: spectrum, steady state, probe transmission, isolation and group delay",
    after_help = "Exit status: 0 ok, 1 failed checks or I/O, 2 usage, 3 configuration, 4 steady state did not converge, 5 singular response.\n\
                  Sweeps use APTOM_THREADS worker threads when set."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spinning speed of the exceptional point.
    Ep(Common),
    /// Eigenfrequencies and phase versus spinning speed.
    Spectrum(SpectrumArgs),
    /// Self-consistent mean field at one spinning speed.
    Steady(SteadyArgs),
    /// Complex probe transmission versus probe detuning.
    Transmission(TransmissionArgs),
    /// Isolation ratio over spinning speed and probe detuning.
    Isolation(PointArgs),
    /// Group delay of both inputs over spinning speed and probe detuning.
    Delay(DelayArgs),
    /// Rectangular grid of chosen quantities.
    Sweep(SweepArgs),
    /// Write the datasets of one figure into a bundle directory.
    Reproduce(ReproduceArgs),
    /// Run the built-in oracle and invariant suite.
    Check(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Symmetrized,
    AsPrinted,
}

impl From<Variant> for MVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Symmetrized => MVariant::Symmetrized,
            Variant::AsPrinted => MVariant::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    MicrosphereNanostring,
    SpinningSphere,
}

impl From<PresetName> for Preset {
    fn from(p: PresetName) -> Self {
        match p {
            PresetName::MicrosphereNanostring => Preset::MicrosphereNanostring,
            PresetName::SpinningSphere => Preset::SpinningSphere,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Cw,
    Ccw,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Parameter file (key = value lines).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,

    /// Built-in parameter set, used when no --config is given.
    #[arg(long, value_enum, default_value = "microsphere-nanostring")]
    pub preset: PresetName,

    /// Override one parameter after loading; repeatable. All overrides are
    /// validated together.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,

    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,

    /// Write to this file instead of standard output.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,

    /// Spinning speeds, Hz: a value, a comma list or MIN:MAX:COUNT.
    /// Defaults to 0 to 2 Ω_EP in 2000 points.
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true, value_parser = parse_axis)]
    pub omega_spin: Option<Axis>,
}

#[derive(Debug, Args)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub common: Common,

    /// Spinning speed, Hz.
    #[arg(long, value_name = "HZ", default_value = "0", value_parser = parse_scalar)]
    pub omega_spin: f64,

    #[arg(long, value_enum, default_value = "on")]
    pub pump: Switch,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,

    /// Spinning speeds, Hz: a value, a comma list or MIN:MAX:COUNT.
    #[arg(long, value_name = "RANGE", default_value = "0", allow_hyphen_values = true, value_parser = parse_axis)]
    pub omega_spin: Axis,

    /// Probe detunings, Hz: a value, a comma list or MIN:MAX:COUNT.
    #[arg(long, value_name = "RANGE", default_value = "0", allow_hyphen_values = true, value_parser = parse_axis)]
    pub delta_p: Axis,

    #[arg(long, value_enum, default_value = "on")]
    pub pump: Switch,

    /// Form of the M coefficient in the response denominator.
    #[arg(long, value_enum, default_value = "symmetrized")]
    pub m_variant: Variant,
}

#[derive(Debug, Args)]
pub struct TransmissionArgs {
    #[command(flatten)]
    pub point: PointArgs,

    /// Probe input port.
    #[arg(long, value_enum, default_value = "both")]
    pub direction: DirectionArg,

    /// Add the relative gap to the dense sideband solve (single-port drive).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct DelayArgs {
    #[command(flatten)]
    pub point: PointArgs,

    /// Dead band for the slow/fast labels, s. Defaults to 1e-3 of the
    /// largest |τ| in the output.
    #[arg(long, value_name = "SECONDS", value_parser = parse_scalar)]
    pub tau_zero_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub point: PointArgs,

    /// Quantities to evaluate, comma separated:
    /// t_cw, t_ccw, T_cw, T_ccw, I, I_norm, tau_cw, tau_ccw, eigvals.
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "I")]
    pub quantity: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(value_enum)]
    pub figure: FigureArg,

    /// Bundle directory; defaults to the figure name.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Points per axis of the heatmaps.
    #[arg(long, value_name = "N", default_value_t = 400)]
    pub heatmap_points: usize,

    /// Points along the line cuts.
    #[arg(long, value_name = "N", default_value_t = 2000)]
    pub line_points: usize,

    /// Half-width of the probe-detuning window, Hz (figure default when omitted).
    #[arg(long, value_name = "HZ", value_parser = parse_scalar)]
    pub dp_half_width: Option<f64>,

    /// |Δp| of the line cuts versus spinning speed, Hz.
    #[arg(long, value_name = "HZ", default_value = "37k", value_parser = parse_scalar)]
    pub landmark: f64,

    #[arg(long, value_enum, default_value = "symmetrized")]
    pub m_variant: Variant,
}

fn parse_override(raw: &str) -> Result<(String, String), String> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{raw}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

pub fn parse_scalar(raw: &str) -> Result<f64, String> {
    parse_number(raw.trim())
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{raw}` is not a number"))
}

/// `V`, `V1,V2,...` or `MIN:MAX:COUNT`.
pub fn parse_axis(raw: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let axis = match parts.as_slice() {
        [min, max, count] => {
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("`{count}` is not a point count"))?;
            Axis::linear(parse_scalar(min)?, parse_scalar(max)?, count)
        }
        [list] => Axis::explicit(list.split(',').map(parse_scalar).collect::<Result<_, _>>()?),
        _ => return Err(format!("expected V, V1,V2,... or MIN:MAX:COUNT, got `{raw}`")),
    };
    axis.map_err(|e| e.to_string())
}
