//! Parameter sets shipped with the crate.

use std::fmt;
use std::str::FromStr;

use crate::config::parse_config;
use crate::error::{Error, Result};
use crate::params::{ParamSpec, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Microsphere with a nanomechanical string (ω_c = 193 THz, κ = 8.5 kHz, R = 50 µm).
    MicrosphereNanostring,
    /// Spinning 1.1 mm sphere; partially reconstructed.
    SpinningSphere,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::MicrosphereNanostring, Preset::SpinningSphere];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MicrosphereNanostring => "microsphere-nanostring",
            Preset::SpinningSphere => "spinning-sphere",
        }
    }

    pub fn config_text(self) -> &'static str {
        match self {
            Preset::MicrosphereNanostring => include_str!("../presets/microsphere-nanostring.cfg"),
            Preset::SpinningSphere => include_str!("../presets/spinning-sphere.cfg"),
        }
    }

    pub fn spec(self) -> ParamSpec {
        parse_config(self.config_text()).expect("shipped preset parses")
    }

    pub fn params(self) -> SystemParams {
        self.spec().build().expect("shipped preset validates")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::validation("preset", format!("unknown preset `{s}`"))
            })
    }
}
