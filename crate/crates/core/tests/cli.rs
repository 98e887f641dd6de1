use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cradle::experiments::{read_field_csv, read_sweep_csv};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn cradle(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cradle"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn cradle")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of a `key = value` line.
fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim().strip_prefix('=').map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

/// `(value, stderr)` from a `name = v +/- se` line.
fn estimate(text: &str, name: &str) -> (f64, f64) {
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{name} =")))
        .unwrap_or_else(|| panic!("no {name} in {text}"));
    let rest = line.split_once('=').unwrap().1;
    let (v, se) = rest.split_once("+/-").unwrap();
    (v.trim().parse().unwrap(), se.split_whitespace().next().unwrap().parse().unwrap())
}

#[test]
fn layout_reports_device_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let o = cradle(&["layout", "--sites", "23", "--pitch-strong", "5", "--pitch-weak", "16"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "J_per_mm") - 1.526).abs() < 1e-3);
    assert!((value(&out, "Jw_per_mm") - 0.189).abs() < 1e-3);
    assert!((value(&out, "alpha") - 0.124).abs() < 1e-3);
    assert!((value(&out, "J_eff_per_mm") - 0.0403).abs() < 1e-4);
    assert!((value(&out, "tau_analytic_mm") - 38.08).abs() < 0.02);
    assert!(out.contains("transfer_regime = true"));
}

#[test]
fn layout_regime_flag_false_for_uniform_triple() {
    let dir = tempfile::tempdir().unwrap();
    let o = cradle(&["layout", "--sites", "3", "--coupling-strong", "1", "--coupling-weak", "1"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(value(&out, "alpha"), 1.0);
    assert!(out.contains("transfer_regime = false"));
}

#[test]
fn layout_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["layout", "--pitch-strong", "5", "--pitch-weak", "16"],
        vec!["layout", "--sites", "23", "--pitch-strong", "5", "--coupling-strong", "1", "--pitch-weak", "16"],
        vec!["layout", "--sites", "23", "--pitch-strong", "-5", "--pitch-weak", "16"],
        vec!["layout", "--sites", "23", "--pitch-strong", "5", "--pitch-weak", "16", "--law", "3.9"],
        vec!["frobnicate"],
    ] {
        let o = cradle(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    }
    let o = cradle(&["layout", "--sites", "23", "--pitch-strong", "-5", "--pitch-weak", "16"], dir.path());
    assert!(stderr(&o).contains("--pitch-strong"));
    let o = cradle(&["layout", "--pitch-strong", "5", "--pitch-weak", "16"], dir.path());
    assert!(stderr(&o).contains("--sites"));
}

#[test]
fn evolve_writes_normalized_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("chain.json");
    let o = cradle(
        &["evolve", "--config", cfg.to_str().unwrap(), "--z-max", "60", "--z-step", "0.1", "--out", "f.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "tau_mm") - 40.26).abs() < 0.01);
    assert!((value(&out, "eta") - 0.9713).abs() < 1e-3);
    let field = read_field_csv(dir.path().join("f.csv")).unwrap();
    assert_eq!(field.z.len(), 601);
    assert!(field.rows.iter().all(|r| r.len() == 23));
    for row in &field.rows {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn evolve_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("chain.json");
    let cfg = cfg.to_str().unwrap();
    let o = cradle(&["evolve", "--config", cfg, "--z-max", "60", "--z-step", "0", "--out", "f.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("z_step"));

    std::fs::write(dir.path().join("bad.json"), "{\n  \"n_sites\": 23,\n  \"weak_pitch_um\": \"x\"\n}").unwrap();
    let o = cradle(&["evolve", "--config", "bad.json", "--z-max", "1", "--z-step", "0.1", "--out", "f.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: bad.json:3:"), "{}", stderr(&o));

    // Unwritable output is a runtime failure.
    let o = cradle(
        &["evolve", "--config", cfg, "--z-max", "1", "--z-step", "0.1", "--out", "missing/dir/f.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn alpha_sweep_prints_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("alpha_sweep.json");
    let o = cradle(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "a.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let slope = value(&out, "slope_mm");
    let implied = value(&out, "implied_J_per_mm");
    assert!((implied - std::f64::consts::PI * 21f64.sqrt() / (2.0 * slope)).abs() < 1e-5);
    let (_, points) = read_sweep_csv(dir.path().join("a.csv")).unwrap();
    assert_eq!(points.len(), 4);
}

#[test]
fn m_sweep_has_thirteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("nnn_sweep.json");
    let o = cradle(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "m.csv", "--meta", "m.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (param, points) = read_sweep_csv(dir.path().join("m.csv")).unwrap();
    assert_eq!(param.as_str(), "nnn_m");
    assert_eq!(points.len(), 13);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(meta["spec"]["n_sites"], 23);
}

#[test]
fn far_island_approaches_plain_nnn_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("defect_distance_sweep.json");
    let o = cradle(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "d.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, points) = read_sweep_csv(dir.path().join("d.csv")).unwrap();
    let etas: Vec<f64> = points.iter().map(|p| p.eta).collect();
    assert!(etas.windows(2).all(|w| w[1] >= w[0]), "{etas:?}");

    std::fs::write(
        dir.path().join("plain.json"),
        r#"{"n_sites": 23, "strong_pitch_um": 5.0, "weak_pitch_um": 16.0,
            "nnn": {"mode": "uniform", "m": 0.05},
            "sweep": {"parameter": "nnn_m", "values": [0.05]},
            "search_window_mm": [10.0, 80.0]}"#,
    )
    .unwrap();
    let o = cradle(&["sweep", "--config", "plain.json", "--out", "p.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, plain) = read_sweep_csv(dir.path().join("p.csv")).unwrap();
    assert!((etas.last().unwrap() - plain[0].eta).abs() < 5e-3);
}

#[test]
fn sweep_without_block_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("chain.json");
    let o = cradle(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no sweep block"));
}

#[test]
fn stats_heralded_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = cradle(
        &["stats", "--source", "heralded", "--mu", "0.0067", "--trials", "1000000", "--seed", "42", "--out", "e.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let (gsi, se) = estimate(&out, "g_si");
    assert!((gsi - 149.0).abs() <= 3.0 * se, "{gsi} +/- {se}");
    assert!(estimate(&out, "g2_zero").0 < 0.05);
    assert!(out.starts_with("counts: n_gates=1000000"));
    let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(csv.starts_with("estimator,value,stderr,n_gates\n"));
    assert!(csv.contains("\ng_si,"));
}

#[test]
fn stats_coherent_source_factorizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cradle(
        &["stats", "--source", "coherent", "--mu", "0.05", "--trials", "1000000", "--seed", "7", "--out", "e.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (g2, se) = estimate(&stdout(&o), "g2_signal");
    assert!((g2 - 1.0).abs() <= 3.0 * se, "{g2} +/- {se}");
    assert!(stderr(&o).contains("g_si undefined"));
}

#[test]
fn stats_reads_back_records() {
    let dir = tempfile::tempdir().unwrap();
    let sim = cradle(
        &["stats", "--source", "heralded", "--mu", "0.2", "--trials", "5000", "--seed", "3", "--dark", "0.01", "--out", "a.csv", "--records", "r.csv"],
        dir.path(),
    );
    assert!(sim.status.success(), "{}", stderr(&sim));
    let again = cradle(&["stats", "--input", "r.csv", "--out", "b.csv"], dir.path());
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(stdout(&sim), stdout(&again));
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn stats_rejects_invalid_model() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["stats", "--source", "heralded", "--mu", "0", "--trials", "10", "--seed", "1", "--out", "e.csv"],
        vec!["stats", "--source", "heralded", "--mu", "0.1", "--trials", "10", "--seed", "1", "--eta-t", "1.5", "--out", "e.csv"],
        vec!["stats", "--source", "laser", "--mu", "0.1", "--trials", "10", "--seed", "1", "--out", "e.csv"],
        vec!["stats", "--source", "heralded", "--mu", "0.1", "--trials", "10", "--out", "e.csv"],
    ] {
        let o = cradle(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"));
    }
}
