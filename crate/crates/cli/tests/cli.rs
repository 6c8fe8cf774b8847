use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn aptom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aptom"))
        .args(args)
        .env_remove("APTOM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header plus data lines of a CSV with a `#` preamble.
fn body(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn help_matches_golden_files() {
    let subcommands = [
        "", "ep", "spectrum", "steady", "transmission", "isolation", "delay", "sweep", "reproduce", "check",
    ];
    for sub in subcommands {
        let args: Vec<&str> = if sub.is_empty() { vec!["--help"] } else { vec![sub, "--help"] };
        let o = aptom(&args);
        assert!(o.status.success());
        let name = if sub.is_empty() { "help.txt".to_string() } else { format!("help-{sub}.txt") };
        let path = golden_dir().join(name);
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            fs::write(&path, &o.stdout).unwrap();
        }
        let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(stdout(&o), want, "help for `{sub}` changed; rerun with UPDATE_GOLDEN=1");
    }
}

#[test]
fn ep_on_microsphere() {
    let o = aptom(&["ep"]);
    assert!(o.status.success());
    let rows = body(&o);
    assert_eq!(rows[0], ["omega_ep_hz", "kappa_hz", "delta_sag_per_hz"]);
    let w: f64 = rows[1][0].parse().unwrap();
    assert!((w / 357.0 - 1.0).abs() < 0.05, "{w}");
}

#[test]
fn isolation_vanishes_at_rest() {
    let o = aptom(&["isolation", "--omega-spin", "0", "--delta-p", "0"]);
    assert!(o.status.success());
    let rows = body(&o);
    assert_eq!(rows[0][4], "I_db");
    assert_eq!(rows[1][4].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.cfg");
    fs::write(
        &cfg,
        "omega_c = 193T\ngamma_c = 1.93k\nkappa = 8.5k\nomega_m = 63M\ngamma_m = 63\nmass = 10f\n\
         g_om = 3.86e18\nradius = 50u\np_pump = 10p\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let base: f64 = body(&aptom(&["ep", "--config", cfg]))[1][0].parse().unwrap();
    let doubled: f64 = body(&aptom(&["ep", "--config", cfg, "--set", "kappa=17k"]))[1][0].parse().unwrap();
    assert!((doubled / base - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_override_is_rejected_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = aptom(&[
        "ep",
        "--set",
        "kappa=1k",
        "--set",
        "mass=-1",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
    assert!(!out.exists());
    assert_eq!(aptom(&["ep", "--set", "colour=red"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(aptom(&["nonsense"]).status.code(), Some(2));
    assert_eq!(aptom(&["isolation", "--delta-p", "1:2"]).status.code(), Some(2));
    assert_eq!(aptom(&["ep", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn dip_exits_five() {
    let o = aptom(&["delay", "--set", "kappa=0", "--pump", "off", "--delta-p", "0"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn check_passes_on_presets() {
    for preset in ["microsphere-nanostring", "spinning-sphere"] {
        let o = aptom(&["check", "--preset", preset]);
        assert!(o.status.success(), "{}", stdout(&o));
        let rows = body(&o);
        assert!(rows[1..].iter().all(|r| r[1] != "fail"));
        assert!(rows.iter().any(|r| r[0] == "as-printed-m-deviation" && r[1] == "info"));
    }
}

#[test]
fn sweep_cell_matches_point_command() {
    let sweep = aptom(&["sweep", "--omega-spin", "100:500:3", "--delta-p", "-400:400:5", "--quantity", "I,tau_cw"]);
    assert!(sweep.status.success());
    let rows = body(&sweep);
    assert_eq!(rows[0], ["omega_spin_hz", "delta_p_hz", "I_db", "tau_cw_s", "phase"]);
    assert_eq!(rows.len(), 1 + 15);
    // Ω = 300, Δp = 200 is the eighth data row
    let cell = &rows[1 + 5 + 3];
    assert_eq!(cell[0].parse::<f64>().unwrap(), 300.0);
    assert_eq!(cell[1].parse::<f64>().unwrap(), 200.0);

    let iso = body(&aptom(&["isolation", "--omega-spin", "300", "--delta-p", "200"]));
    assert_eq!(iso[1][4], cell[2]);
    let delay = body(&aptom(&["delay", "--omega-spin", "300", "--delta-p", "200"]));
    assert_eq!(delay[1][2], cell[3]);
}

#[test]
fn sweep_output_is_deterministic_across_thread_counts() {
    let args = ["sweep", "--omega-spin", "0:700:9", "--delta-p", "-1k:1k:7", "--quantity", "T_cw,I,tau_ccw"];
    let a = aptom(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_aptom"))
        .args(args)
        .env("APTOM_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_output_parses() {
    let o = aptom(&["transmission", "--omega-spin", "350", "--delta-p", "-1k:1k:3", "--format", "json", "--oracle"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    for r in records {
        assert!(r["oracle_rel_err_cw"].as_f64().unwrap() < 1e-8);
        assert!(r["oracle_rel_err_ccw"].as_f64().unwrap() < 1e-8);
    }
    assert_eq!(v["provenance"]["m_variant"], "symmetrized");

    let s = aptom(&["sweep", "--omega-spin", "0,350", "--delta-p", "0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(v["shape"], serde_json::json!([2, 1]));
}

#[test]
fn spectrum_shows_phase_change() {
    let o = aptom(&["spectrum", "--omega-spin", "0,700"]);
    let rows = body(&o);
    assert_eq!(rows[1].last().unwrap(), "APTS");
    assert_eq!(rows[2].last().unwrap(), "APTB");
}

#[test]
fn reproduce_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4");
    let o = aptom(&[
        "reproduce",
        "fig4",
        "--out-dir",
        out.to_str().unwrap(),
        "--heatmap-points",
        "8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["fig4a_isolation_map.csv", "fig4b_delay_cw_map.csv", "fig4c_delay_ccw_map.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["panels"][0]["shape"], serde_json::json!([8, 8]));
}
