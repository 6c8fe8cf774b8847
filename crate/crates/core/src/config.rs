//! Flat `key = value` configuration files.
//!
//! ```text
//! # microsphere with nanostring
//! omega_c = 193e12
//! gamma_c = 1.93k
//! kappa   = 8.5e3   # dissipative backscattering
//! ```
//!
//! `#` starts a comment. Numeric values accept an SI prefix suffix
//! (`f p n u m k M G T`). Keys are listed in [`CONFIG_KEYS`]; anything else
//! is rejected, as are duplicates.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{ParamSpec, SystemParams, CONFIG_KEYS};

pub fn parse_config(text: &str) -> Result<ParamSpec> {
    let mut spec = ParamSpec::new();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("empty key or value in `{line}`"),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.to_string());
        spec.set(key, value)?;
    }
    Ok(spec)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemParams> {
    load_config_with_overrides(path, &[])
}

/// Load a file and apply `key=value` overrides before validation. Either the
/// whole set validates or nothing is returned.
pub fn load_config_with_overrides(
    path: impl AsRef<Path>,
    overrides: &[(String, String)],
) -> Result<SystemParams> {
    let text = fs::read_to_string(path)?;
    let mut spec = parse_config(&text)?;
    apply_overrides(&mut spec, overrides)?;
    spec.build()
}

pub fn apply_overrides(spec: &mut ParamSpec, overrides: &[(String, String)]) -> Result<()> {
    let names = |k: &str| overrides.iter().any(|(o, _)| o == k);
    let mut next = spec.clone();
    for (key, value) in overrides {
        next.set(key, value)?;
        // Loss fields the override set does not name are re-derived.
        match key.as_str() {
            "gamma_c" if !names("gamma_0") && !names("gamma_ex") && !names("q_factor") => {
                next.gamma_0 = None;
                next.gamma_ex = None;
                next.q_factor = None;
            }
            "gamma_0" if !names("gamma_c") => {
                next.gamma_c = None;
                if !names("q_factor") {
                    next.q_factor = None;
                }
            }
            "gamma_ex" if !names("gamma_c") => next.gamma_c = None,
            "q_factor" if !names("gamma_0") && !names("gamma_c") => {
                next.gamma_0 = None;
                next.gamma_c = None;
            }
            _ => {}
        }
    }
    next.build()?;
    *spec = next;
    Ok(())
}

/// Canonical text form. Every field is written, so
/// `parse_config(&write_config(p))?.build()? == *p`.
pub fn write_config(p: &SystemParams) -> String {
    let spec = p.to_spec();
    let mut out = String::new();
    for &key in CONFIG_KEYS {
        let value = match key {
            "rate_convention" => Some(p.rate_convention.name().to_string()),
            _ => field(&spec, key).map(|v| format!("{v:e}")),
        };
        if let Some(value) = value {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
    }
    out
}

fn field(spec: &ParamSpec, key: &str) -> Option<f64> {
    match key {
        "omega_c" => spec.omega_c,
        "q_factor" => spec.q_factor,
        "gamma_0" => spec.gamma_0,
        "gamma_ex" => spec.gamma_ex,
        "gamma_c" => spec.gamma_c,
        "kappa" => spec.kappa,
        "omega_m" => spec.omega_m,
        "gamma_m" => spec.gamma_m,
        "mass" => spec.mass,
        "g_om" => spec.g_om,
        "radius" => spec.radius,
        "n_ref" => spec.n_ref,
        "dn_dlambda" => spec.dn_dlambda,
        "lambda_0" => spec.lambda_0,
        "p_pump" => spec.p_pump,
        "p_probe" => spec.p_probe,
        "delta_c" => spec.delta_c,
        _ => None,
    }
}
