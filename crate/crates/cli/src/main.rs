mod args;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use aptom_core::checks::run_checks;
use aptom_core::config::{apply_overrides, load_config_with_overrides, write_config};
use aptom_core::figures::{reproduce_figure, FigureId, FigureOptions};
use aptom_core::observables::group_delay_at;
use aptom_core::probe::{sideband_oracle, transmission_for_shift};
use aptom_core::steady::solve_for_shift;
use aptom_core::sweep::{fmt_f64, run_sweep, Axis, Provenance, Quantity, SweepSpec};
use aptom_core::{
    classify_slow_fast, drive_amplitudes, eigenfrequencies, ep_speed, isolation_ratio, sagnac_shift,
    Direction, Error, MVariant, OperatingPoint, Preset, ProbeDrive, SystemParams,
};
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, Common, DirectionArg, FigureArg, Format, PointArgs};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_SINGULAR: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Domain(_) | Error::UnknownFigure(_) => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_SOLVER,
        Error::Singular { .. } | Error::DipSingularity { .. } | Error::UndefinedIsolation { .. } => EXIT_SINGULAR,
        Error::Io(_) => EXIT_FAILED,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("aptom: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> aptom_core::Result<u8> {
    match cli.command {
        Command::Ep(c) => cmd_ep(&c),
        Command::Spectrum(a) => cmd_spectrum(&a.common, a.omega_spin),
        Command::Steady(a) => cmd_steady(&a.common, a.omega_spin, a.pump.is_on()),
        Command::Transmission(a) => cmd_transmission(&a.point, a.direction, a.oracle),
        Command::Isolation(a) => cmd_isolation(&a),
        Command::Delay(a) => cmd_delay(&a.point, a.tau_zero_tol),
        Command::Sweep(a) => cmd_sweep(&a.point, &a.quantity),
        Command::Reproduce(a) => cmd_reproduce(&a),
        Command::Check(c) => cmd_check(&c),
    }
}

fn load_params(c: &Common) -> aptom_core::Result<SystemParams> {
    match &c.config {
        Some(path) => load_config_with_overrides(path, &c.overrides),
        None => {
            let mut spec = Preset::from(c.preset).spec();
            apply_overrides(&mut spec, &c.overrides)?;
            spec.build()
        }
    }
}

/// Named columns plus rows of cells, written with the provenance preamble.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "NaN".to_string(),
        other => other.to_string(),
    }
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn emit(c: &Common, p: &SystemParams, prov: &Provenance, table: &Table) -> aptom_core::Result<()> {
    let mut out: Box<dyn Write> = match &c.output {
        Some(path) => Box::new(BufWriter::new(fs::File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match c.format {
        Format::Csv => {
            for (k, v) in prov.entries() {
                writeln!(out, "# {k}: {v}")?;
            }
            for line in write_config(p).lines() {
                writeln!(out, "# param {line}")?;
            }
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(cell).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let records: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(k, v)| (k.to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect();
            let doc = json!({ "provenance": prov, "params": p, "records": records });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_ep(c: &Common) -> aptom_core::Result<u8> {
    let p = load_params(c)?;
    let w = ep_speed(&p)?;
    let mut t = Table::new(vec!["omega_ep_hz", "kappa_hz", "delta_sag_per_hz"]);
    let slope = if w > 0.0 { p.kappa / w } else { sagnac_shift(&p, 1.0).delta_sag };
    t.push(vec![num(w), num(p.kappa), num(slope)]);
    emit(c, &p, &Provenance::new(&p, MVariant::default(), true), &t)?;
    Ok(0)
}

fn cmd_spectrum(c: &Common, omega: Option<Axis>) -> aptom_core::Result<u8> {
    let p = load_params(c)?;
    let omega = match omega {
        Some(a) => a,
        None => Axis::linear(0.0, 2.0 * ep_speed(&p)?, 2000)?,
    };
    let mut t = Table::new(vec![
        "omega_spin_hz",
        "delta_sag_hz",
        "re_omega_plus_hz",
        "im_omega_plus_hz",
        "re_omega_minus_hz",
        "im_omega_minus_hz",
        "phase",
    ]);
    for &w in omega.values() {
        if w < 0.0 {
            return Err(Error::Validation {
                key: "omega_spin".into(),
                message: "spinning speed must be non-negative".into(),
            });
        }
        let shift = sagnac_shift(&p, w);
        let e = eigenfrequencies(&p, &shift);
        t.push(vec![
            num(w),
            num(shift.delta_sag),
            num(e.omega_plus.re),
            num(e.omega_plus.im),
            num(e.omega_minus.re),
            num(e.omega_minus.im),
            json!(e.phase.label()),
        ]);
    }
    emit(c, &p, &Provenance::new(&p, MVariant::default(), true), &t)?;
    Ok(0)
}

fn cmd_steady(c: &Common, omega: f64, pump_on: bool) -> aptom_core::Result<u8> {
    let p = load_params(c)?;
    let op = OperatingPoint::new(omega, 0.0)?.with_pump(pump_on);
    let s = aptom_core::solve_steady_state(&p, &op)?;
    let mut t = Table::new(vec![
        "omega_spin_hz",
        "x_bar_m",
        "photons_cw",
        "photons_ccw",
        "iterations",
        "residual",
    ]);
    t.push(vec![
        num(omega),
        num(s.x_bar),
        num(s.photons_cw()),
        num(s.photons_ccw()),
        json!(s.iterations),
        num(s.residual),
    ]);
    emit(c, &p, &Provenance::new(&p, MVariant::default(), pump_on), &t)?;
    Ok(0)
}

/// Visit every (Ω, Δp) pair with the steady state solved once per Ω.
fn for_each_point(
    p: &SystemParams,
    a: &PointArgs,
    mut f: impl FnMut(&OperatingPoint, &aptom_core::SagnacShift, &aptom_core::SteadyState) -> aptom_core::Result<()>,
) -> aptom_core::Result<()> {
    for &w in a.omega_spin.values() {
        OperatingPoint::new(w, 0.0)?;
        let shift = sagnac_shift(p, w);
        let s = solve_for_shift(p, &shift, a.pump.is_on())?;
        for &dp in a.delta_p.values() {
            let op = OperatingPoint::new(w, dp)?.with_pump(a.pump.is_on());
            f(&op, &shift, &s)?;
        }
    }
    Ok(())
}

fn cmd_transmission(a: &PointArgs, dir: DirectionArg, oracle: bool) -> aptom_core::Result<u8> {
    let p = load_params(&a.common)?;
    let variant = MVariant::from(a.m_variant);
    let dirs: &[Direction] = match dir {
        DirectionArg::Cw => &[Direction::Cw],
        DirectionArg::Ccw => &[Direction::Ccw],
        DirectionArg::Both => &[Direction::Cw, Direction::Ccw],
    };
    let mut columns = vec!["omega_spin_hz", "delta_p_hz"];
    for d in dirs {
        let (re, im, big, orc) = match d {
            Direction::Cw => ("re_t_cw", "im_t_cw", "T_cw", "oracle_rel_err_cw"),
            Direction::Ccw => ("re_t_ccw", "im_t_ccw", "T_ccw", "oracle_rel_err_ccw"),
        };
        columns.extend([re, im, big]);
        if oracle {
            columns.push(orc);
        }
    }
    let mut t = Table::new(columns);
    let eps_p = drive_amplitudes(&p).1;
    let gamma_ex = p.rate_scale() * p.gamma_ex;
    for_each_point(&p, a, |op, shift, s| {
        let r = transmission_for_shift(&p, shift, op.delta_p, s, variant)?;
        let mut row = vec![num(op.omega_spin), num(op.delta_p)];
        for &d in dirs {
            let tc = r.t(d);
            row.extend([num(tc.re), num(tc.im), num(tc.norm_sqr())]);
            if oracle {
                let (o_cw, o_ccw) = sideband_oracle(&p, &op.with_direction(d), s, ProbeDrive::Single)?;
                let amp = if d == Direction::Cw { o_cw } else { o_ccw };
                let t_oracle = 1.0 - gamma_ex * amp / eps_p;
                row.push(num((tc - t_oracle).norm() / t_oracle.norm()));
            }
        }
        t.push(row);
        Ok(())
    })?;
    emit(&a.common, &p, &Provenance::new(&p, variant, a.pump.is_on()), &t)?;
    Ok(0)
}

fn cmd_isolation(a: &PointArgs) -> aptom_core::Result<u8> {
    let p = load_params(&a.common)?;
    let variant = MVariant::from(a.m_variant);
    let mut t = Table::new(vec!["omega_spin_hz", "delta_p_hz", "T_cw", "T_ccw", "I_db", "phase"]);
    for_each_point(&p, a, |op, shift, s| {
        let r = transmission_for_shift(&p, shift, op.delta_p, s, variant)?;
        let phase = eigenfrequencies(&p, shift).phase;
        t.push(vec![
            num(op.omega_spin),
            num(op.delta_p),
            num(r.big_t_cw),
            num(r.big_t_ccw),
            num(isolation_ratio(&r)?),
            json!(phase.label()),
        ]);
        Ok(())
    })?;
    emit(&a.common, &p, &Provenance::new(&p, variant, a.pump.is_on()), &t)?;
    Ok(0)
}

fn cmd_delay(a: &PointArgs, zero_tol: Option<f64>) -> aptom_core::Result<u8> {
    let p = load_params(&a.common)?;
    let variant = MVariant::from(a.m_variant);
    let mut raw = Vec::new();
    for_each_point(&p, a, |op, shift, s| {
        let cw = group_delay_at(&p, shift, s, op.delta_p, Direction::Cw, variant)?;
        let ccw = group_delay_at(&p, shift, s, op.delta_p, Direction::Ccw, variant)?;
        raw.push((op.omega_spin, op.delta_p, cw, ccw, eigenfrequencies(&p, shift).phase));
        Ok(())
    })?;
    let tol = zero_tol.unwrap_or_else(|| {
        1e-3 * raw.iter().fold(0.0_f64, |m, r| m.max(r.2.abs()).max(r.3.abs()))
    });
    let mut t = Table::new(vec![
        "omega_spin_hz",
        "delta_p_hz",
        "tau_cw_s",
        "tau_ccw_s",
        "slow_fast_cw",
        "slow_fast_ccw",
        "phase",
    ]);
    for (w, dp, cw, ccw, phase) in raw {
        t.push(vec![
            num(w),
            num(dp),
            num(cw),
            num(ccw),
            json!(classify_slow_fast(cw, tol).label()),
            json!(classify_slow_fast(ccw, tol).label()),
            json!(phase.label()),
        ]);
    }
    emit(&a.common, &p, &Provenance::new(&p, variant, a.pump.is_on()), &t)?;
    Ok(0)
}

fn cmd_sweep(a: &PointArgs, quantities: &[String]) -> aptom_core::Result<u8> {
    let p = load_params(&a.common)?;
    let quantities = quantities
        .iter()
        .map(|q| q.trim().parse::<Quantity>())
        .collect::<aptom_core::Result<Vec<_>>>()?;
    let spec = SweepSpec::new(a.omega_spin.clone(), a.delta_p.clone(), quantities)
        .with_pump(a.pump.is_on())
        .with_variant(a.m_variant.into());
    let r = run_sweep(&p, &spec)?;
    let mut out: Box<dyn Write> = match &a.common.output {
        Some(path) => Box::new(BufWriter::new(fs::File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match a.common.format {
        Format::Csv => r.write_csv(&mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &r.to_json()).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    if r.error_count() > 0 {
        eprintln!("aptom: {} cells could not be evaluated (see the error lines in the output)", r.error_count());
    }
    Ok(0)
}

fn cmd_reproduce(a: &args::ReproduceArgs) -> aptom_core::Result<u8> {
    let p = load_params(&a.common)?;
    let id = match a.figure {
        FigureArg::Fig2 => FigureId::Fig2,
        FigureArg::Fig3 => FigureId::Fig3,
        FigureArg::Fig4 => FigureId::Fig4,
    };
    let opts = FigureOptions {
        heatmap_points: a.heatmap_points,
        line_points: a.line_points,
        m_variant: a.m_variant.into(),
        delta_p_half_width: a.dp_half_width,
        landmark_delta_p: a.landmark,
    };
    let bundle = reproduce_figure(&p, id, &opts)?;
    let dir = a.out_dir.clone().unwrap_or_else(|| id.name().into());
    for path in bundle.write_dir(&dir)? {
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_check(c: &Common) -> aptom_core::Result<u8> {
    let p = load_params(c)?;
    let outcomes = run_checks(&p);
    let mut t = Table::new(vec!["check", "status", "value", "tolerance", "detail"]);
    for o in &outcomes {
        let status = match (o.informational, o.passed) {
            (true, _) => "info",
            (false, true) => "pass",
            (false, false) => "fail",
        };
        t.push(vec![
            json!(o.name),
            json!(status),
            num(o.value),
            num(o.tolerance),
            json!(o.detail.replace(',', ";")),
        ]);
    }
    emit(c, &p, &Provenance::new(&p, MVariant::default(), true), &t)?;
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { EXIT_FAILED })
}
