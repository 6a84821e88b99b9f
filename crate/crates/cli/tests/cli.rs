use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ionwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["run", "--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    ionwalk(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

fn col(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).expect("column");
    r.records().map(|x| x.unwrap()[i].parse().unwrap()).collect()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn walk_ideal_odd_sites_vanish() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &[
            "walk-ideal",
            "--step-size",
            "2",
            "--steps",
            "100",
            "--scaling-sizes",
            "",
        ],
    );
    assert_ok(&o);
    let ks = col(&d.path().join("positions.csv"), "k");
    let w = col(&d.path().join("positions.csv"), "lattice_weight");
    assert!(ks
        .iter()
        .zip(&w)
        .filter(|(k, _)| **k as i64 % 2 != 0)
        .all(|(_, w)| *w < 1e-6));
    let total: f64 = w.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(rows(&d.path().join("sigma.csv")).len(), 101);
    assert!(!d.path().join("scaling.csv").exists());

    let m = json(&d.path().join("manifest.json"));
    assert_eq!(m["scenario"], "walk-ideal");
    assert_eq!(m["inputs"]["steps"], 100);
    assert_eq!(m["inputs"]["step-size"], 2.0);
    assert_eq!(m["inputs"]["symmetric"], false);
    assert_eq!(m["summary"]["max_odd_lattice_weight"], 0.0);
    assert!(m["outputs"].as_array().unwrap().iter().any(|f| f == "positions.csv"));
    assert!(m["runtime_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn unknown_key_is_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["walk-ideal", "--no-such-key", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("no-such-key"));
    assert_eq!(json(&d.path().join("error.json")), err);
    assert!(!d.path().join("manifest.json").exists());
}

#[test]
fn bad_values_and_scenarios_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["nope"],
        vec!["walk-ideal", "--steps", "abc"],
        vec!["walk-ideal", "--step-size", "-1"],
        vec!["calibrate", "--eta", "-0.3"],
        vec!["calibrate", "--level", "XYZ"],
        vec!["walk-ideal", "--scaling-max", "10"],
        vec!["walk-ideal", "stray"],
    ] {
        let o = run_in(d.path(), &args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = ionwalk(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncation_is_numerical_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &["trajectory", "--levels", "LDA", "--dim", "16", "--duration-us", "5"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err = json(&d.path().join("error.json"));
    assert_eq!(err["error"]["exit_code"], 3);
    assert_eq!(err["error"]["scenario"], "trajectory");
}

#[test]
fn identical_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = ["readout-roundtrip", "--trials", "20", "--noise", "0.05"];
    for (dir, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let mut v = vec!["--seed", seed];
        v.extend_from_slice(&args);
        assert_ok(&run_in(dir.path(), &v));
    }
    for f in ["trials.csv", "distributions.csv", "signal.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_ne!(x, std::fs::read(c.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&a.path().join("manifest.json"))["seed"], 7);
}

#[test]
fn config_file_with_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    let out = d.path().join("o");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"scenario": "walk-ideal", "steps": 10, "step_size": 1.5, "scaling-sizes": "", "out": "{}"}}"#,
            out.display()
        ),
    )
    .unwrap();
    let o = ionwalk(&["run", "--config", cfg.to_str().unwrap(), "--step-size", "3"]);
    assert_ok(&o);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"]["steps"], 10);
    assert_eq!(m["inputs"]["step-size"], 3.0);
    assert_eq!(m["config_file"], cfg.to_str().unwrap());

    std::fs::write(&cfg, r#"{"scenario": "walk-ideal", "bogus": 1}"#).unwrap();
    let o = ionwalk(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "[1, 2]").unwrap();
    let o = ionwalk(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runner_keys_after_scenario() {
    let d = tempfile::tempdir().unwrap();
    let o = ionwalk(&[
        "run",
        "walk-ideal",
        "--steps",
        "5",
        "--scaling-sizes",
        "",
        "--workers",
        "1",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_ok(&o);
    let m = json(&d.path().join("manifest.json"));
    assert_eq!(m["workers"], 1);
    assert_eq!(m["inputs"]["steps"], 5);
}

#[test]
fn manifest_records_physical_parameters() {
    let d = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        d.path(),
        &["calibrate", "--k-max", "2", "--level", "LDA", "--trap-hz", "2e6"],
    ));
    let m = json(&d.path().join("manifest.json"));
    let p = &m["sim_params"][0];
    assert_eq!(p["level"], "LDA");
    assert!((p["omega_z"].as_f64().unwrap() - std::f64::consts::TAU * 2e6).abs() < 1e-3);
    for key in [
        "trap-hz",
        "delta-hz",
        "omega-d-hz",
        "eta",
        "phi0",
        "z0",
        "force-ratio",
        "dim",
        "level",
        "wait",
        "post-wait",
    ] {
        assert!(m["inputs"].get(key).is_some(), "{key}");
    }
    let mean_n = col(&d.path().join("positions.csv"), "mean_n");
    assert_eq!(mean_n.len(), 3);
    // LDA: exact coherent steps of |Δα| = 1.24
    for (k, n) in mean_n.iter().enumerate() {
        assert!((n - (1.24 * k as f64).powi(2)).abs() < 1e-6, "{k}: {n}");
    }
}

#[test]
fn small_scenarios_run() {
    let cases: [&[&str]; 6] = [
        &[
            "resonant",
            "--duration-us",
            "1",
            "--segments",
            "4",
            "--wigner-points",
            "5",
        ],
        &["stepwise", "--pulses", "2", "--samples", "8"],
        &["combined-pulse", "--level", "RWA"],
        &["walk-positions", "--noise", "0.001"],
        &["trajectory", "--duration-us", "2", "--samples", "20"],
        &["readout-roundtrip", "--trials", "3", "--noise", "0"],
    ];
    for args in cases {
        let d = tempfile::tempdir().unwrap();
        assert_ok(&run_in(d.path(), args));
        let m = json(&d.path().join("manifest.json"));
        for f in m["outputs"].as_array().unwrap() {
            assert!(d.path().join(f.as_str().unwrap()).exists(), "{args:?}: {f}");
        }
    }
}

#[test]
fn stepwise_reverses_rotation() {
    let d = tempfile::tempdir().unwrap();
    assert_ok(&run_in(d.path(), &["stepwise"]));
    let s = col(&d.path().join("pulses.csv"), "rotation_sense");
    assert_eq!(s.len(), 8);
    assert!(s[0] > 0.0 && s[7] < 0.0);
}

#[test]
fn combined_pulse_exports_programs() {
    let d = tempfile::tempdir().unwrap();
    assert_ok(&run_in(d.path(), &["combined-pulse", "--steps", "2"]));
    let prog = json(&d.path().join("walk-program.json"));
    let events = prog["events"].as_array().unwrap();
    assert_eq!(events.first().unwrap()["kind"], "rf");
    let total = prog["total_duration"].as_f64().unwrap();
    assert!((total - 2.0 * 12.0 * 5e-6).abs() < 1e-12);
    assert_eq!(rows(&d.path().join("branches.csv")).len(), 4);
}

#[test]
fn scan_td_defaults_reach_ratio() {
    let d = tempfile::tempdir().unwrap();
    assert_ok(&run_in(d.path(), &["scan-td"]));
    let ratio = col(&d.path().join("scan.csv"), "ratio");
    assert!(ratio.iter().copied().fold(0.0, f64::max) >= 2.9);
    let m = json(&d.path().join("manifest.json"));
    let opt = m["summary"]["optimum"]["t_d_rel"].as_f64().unwrap();
    assert!((opt - 1.0).abs() < 0.02);
}

#[test]
fn kick_threshold_fit_report() {
    let d = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        d.path(),
        &["kick-threshold", "--alpha-max", "10", "--points", "5"],
    ));
    let fit = json(&d.path().join("fit.json"));
    let im = fit["reference"]["imaginary"]["t_at_ns"].as_f64().unwrap();
    let re = fit["reference"]["real"]["t_at_ns"].as_f64().unwrap();
    assert!((im - 0.21).abs() < 0.01 && (re - 2.18).abs() < 0.01);
    assert_eq!(fit["fits"].as_array().unwrap().len(), 2);
    let t = rows(&d.path().join("thresholds.csv"));
    assert_eq!(t.len(), 10);
    let dev = col(&d.path().join("thresholds.csv"), "deviation");
    let bound = col(&d.path().join("thresholds.csv"), "bound");
    assert!(dev.iter().zip(&bound).all(|(d, b)| d <= &(3.0 * b)));
}

#[test]
fn list_json_covers_all_scenarios() {
    let o = ionwalk(&["list", "--json"]);
    assert_ok(&o);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names.len(), 10);
    assert!(names.contains(&"scan-td") && names.contains(&"kick-threshold"));
}
