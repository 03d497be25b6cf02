use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn flyq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flyq")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_column(path: &Path, col: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == col).unwrap();
    r.records().map(|rec| rec.unwrap()[k].parse().unwrap()).collect()
}

#[test]
fn every_golden_config_validates() {
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = flyq(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_config_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 1, "mode": "generate", "system": {"#);
    let out_dir = dir.path().join("out");
    let out = flyq(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    assert!(!out.stderr.is_empty());
}

#[test]
fn physics_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let negative = r#"{"schema_version": 1, "mode": "generate",
        "system": {"initial_state": "excited", "t_final": 5.0,
                   "coupling": {"segments": [{"type": "const", "start": 0, "end": 1, "value": -1.0}], "tail": 1.0}}}"#;
    let overlapping = r#"{"schema_version": 1, "mode": "generate",
        "system": {"initial_state": "excited", "coupling": 1.0, "t_final": 5.0,
                   "detuning": {"segments": [{"type": "const", "start": 0, "end": 1, "value": 1.0},
                                             {"type": "linear", "start": 0.5, "end": 2, "from": 1.0, "to": 0.0}]}}}"#;
    let wrong_command = r#"{"schema_version": 1, "mode": "generate",
        "system": {"initial_state": "excited", "coupling": 1.0, "t_final": 5.0}}"#;
    for (text, cmd) in [(negative, "validate"), (overlapping, "validate"), (wrong_command, "design")] {
        let cfg = write_config(dir.path(), text);
        let out = flyq(&[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
}

#[test]
fn spontaneous_emission_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = flyq(&[
        "simulate",
        "--config",
        scenario("spontaneous.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let p = csv_column(&out_dir.join("ladder.csv"), "probability");
    assert!((p[1] - 1.0).abs() < 1e-6, "{p:?}");
    let tau = csv_column(&out_dir.join("wavepacket_1.csv"), "tau");
    let re = csv_column(&out_dir.join("wavepacket_1.csv"), "re");
    for (t, x) in tau.iter().zip(&re).step_by(97) {
        assert!((x - (-0.5 * t).exp()).abs() < 1e-6);
    }
    let diag: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["mode"], "generate");
    assert!(diag["simulation"]["residual_excitation"].as_f64().unwrap() < 1e-4);
    for f in ["controls.csv", "wavepacket_2.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn exponential_target_designs_constant_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "mode": "design_source",
            "target": {"nu": {"kind": "exponential", "rate": 0.5}, "support": [0.0, 12.0], "samples": 2401},
            "simulation": {"step": 0.005, "ell_max": 1}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = flyq(&["design", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let tau = csv_column(&out_dir.join("design.csv"), "tau");
    let gamma = csv_column(&out_dir.join("design.csv"), "gamma");
    // constant 1/2, lifted near the end because the support is finite
    for (t, g) in tau.iter().zip(&gamma).take_while(|(t, _)| **t <= 10.0) {
        let exact = 0.5 / (1.0 - (t - 12.0).exp());
        assert!((g - exact).abs() < 1e-5, "{t} {g}");
    }
    assert!((gamma[0] - 0.5).abs() < 1e-5);
    let eps = csv_column(&out_dir.join("design.csv"), "epsilon");
    assert!(eps.iter().all(|e| *e == 0.0));
}

#[test]
fn unnormalizable_target_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "mode": "design_source",
            "target": {"nu": {"kind": "samples", "values": [0, 0, 0, 0]}, "support": [0.0, 3.0], "samples": 4}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = flyq(&["design", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("normaliz"));
    assert!(!out_dir.exists());
}

fn small_optimize(generations: usize) -> String {
    format!(
        r#"{{"schema_version": 1, "mode": "optimize", "seed": 5,
            "system": {{"initial_state": "excited", "coupling": 1.0, "t_final": 10.0}},
            "simulation": {{"step": 0.02, "ell_max": 1}},
            "optimization": {{
              "parametrization": {{"basis": {{"kind": "piecewise_constant", "n_bins": 3}}, "window": [0, 1.5],
                                  "channels": [{{"channel": "u_x", "lo": -2, "hi": 2}}]}},
              "objective": {{"kind": "maximize_p", "ell": 1}},
              "ga": {{"population": 8, "generations": {generations}}}}}}}"#
    )
}

#[test]
fn optimize_with_zero_generations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_optimize(0));
    let out_dir = dir.path().join("out");
    let out = flyq(&["optimize", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let gens = csv_column(&out_dir.join("history.csv"), "generation");
    assert_eq!(gens, vec![0.0]);
    assert_eq!(csv_column(&out_dir.join("best_params.csv"), "value").len(), 3);
}

#[test]
fn optimize_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_optimize(5));
    let run = |name: &str, threads: &str| {
        let d = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_flyq"))
            .args(["optimize", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--seed", "9"])
            .env("FLYQ_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        d
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for f in ["history.csv", "best_params.csv", "ladder.csv", "controls.csv", "wavepacket_1.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let diag: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["optimization"]["seed"], 9);
}
