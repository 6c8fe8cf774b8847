//! Simulation of a spinning whispering-gallery resonator with dissipative
//! backscattering and a mechanical mode.
//!
//! The pieces, bottom up:
//!
//! * [`params`], [`config`], [`presets`]: validated parameter sets and their file format,
//! * [`sagnac`]: rotation-induced splitting, eigenspectrum, exceptional point,
//! * [`steady`]: self-consistent mean field,
//! * [`probe`]: sideband response and probe transmission,
//! * [`observables`]: isolation ratio and group delay,
//! * [`sweep`], [`figures`]: parameter grids and figure datasets,
//! * [`checks`]: the built-in oracle suite behind `aptom check`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod figures;
pub mod observables;
pub mod params;
pub mod presets;
pub mod probe;
pub mod sagnac;
pub mod steady;
pub mod sweep;

pub use config::{load_config, load_config_with_overrides, parse_config, write_config};
pub use error::{Error, Result};
pub use observables::{classify_slow_fast, group_delay, isolation_ratio, Observables, SlowFast};
pub use params::{drive_amplitudes, Direction, OperatingPoint, ParamSpec, RateConvention, SystemParams};
pub use presets::Preset;
pub use probe::{
    probe_amplitudes, sideband_coefficients, sideband_oracle, transmission, MVariant, ProbeDrive,
    ProbeResponse, SidebandCoefficients,
};
pub use sagnac::{apt_defect, eigenfrequencies, ep_speed, sagnac_shift, Eigenpair, Phase, SagnacShift};
pub use sweep::{run_sweep, Axis, Quantity, SweepResult, SweepSpec};
pub use steady::{solve_steady_state, steady_residual, SteadyState};

