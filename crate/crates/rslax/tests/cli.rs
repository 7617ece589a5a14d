use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rslax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rslax"))
        .args(args)
        .output()
        .expect("spawn rslax")
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_config(command: &str, config: &Path, out: &Path) -> Output {
    rslax(&[
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn run_text(command: &str, text: &str, dir: &Path) -> Output {
    let config = dir.join("config.json");
    std::fs::write(&config, text).unwrap();
    run_config(command, &config, &dir.join("out"))
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sample_configs_pass() {
    for (command, name) in [
        ("lax", "lax.json"),
        ("evolve", "evolve.json"),
        ("limit", "limit_cm.json"),
        ("limit", "limit_degeneration.json"),
        ("reduce", "reduce.json"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_config(command, &sample(name), dir.path());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let report = json(&dir.path().join("report.json"));
        for f in report["files"].as_array().unwrap() {
            assert!(dir.path().join(f.as_str().unwrap()).exists(), "{name}: {f}");
        }
    }
}

#[test]
fn free_particle_moves_linearly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_text(
        "evolve",
        r#"{"schema_version": 1, "params": {
            "rs": {"q": [[0.2, 0.1]], "p": [[0.3, -0.2]], "hbar": [0.1, 0.05], "lattice": {"kind": "trigonometric"}},
            "hamiltonian": {"kind": "trace_power", "z": [0.7, 0.4]},
            "t_end": 0.5, "dt": 0.01}}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("out/trajectory.csv"));
    assert_eq!(rows.len(), 51);
    let (first, last) = (&rows[0], &rows[50]);
    for row in &rows {
        let s = row[0] / last[0];
        for col in 1..5 {
            let linear = first[col] + s * (last[col] - first[col]);
            assert!(
                (row[col] - linear).abs() < 1e-10,
                "t = {}: {} vs {linear}",
                row[0],
                row[col]
            );
        }
        // momentum is conserved
        assert!((row[3] - first[3]).abs() < 1e-12 && (row[4] - first[4]).abs() < 1e-12);
    }
}

#[test]
fn elliptic_three_body_flow_is_isospectral() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("evolve", &sample("evolve.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&dir.path().join("evolve.json"));
    assert!(summary["max_spectral_drift"].as_f64().unwrap() < 1e-6);
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r.len() == 1 + 4 * 3 + 1));
}

#[test]
fn nonpositive_step_is_invalid() {
    for dt in ["0", "-0.01"] {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            r#"{{"schema_version": 1, "params": {{
                "rs": {{"q": [0, 1], "p": [0, 0], "hbar": 0.1, "lattice": {{"kind": "trigonometric"}}}},
                "hamiltonian": {{"kind": "trace_power", "z": [0.7, 0.4]}}, "t_end": 1, "dt": {dt}}}}}"#
        );
        let out = run_text("evolve", &text, dir.path());
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
    }
}

#[test]
fn collision_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_text(
        "evolve",
        r#"{"schema_version": 1, "params": {
            "rs": {"q": [0, 0.0005], "p": [0, 0], "hbar": [0, 0.05], "lattice": {"kind": "trigonometric"}},
            "hamiltonian": {"kind": "trace_power", "z": [1.1, 0.6]}, "t_end": 0.1, "dt": 0.01}}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let summary = json(&dir.path().join("out/evolve.json"));
    assert_eq!(summary["completed"], false);
    assert!(summary["error"].as_str().unwrap().contains("collision"));
    assert!(!csv_rows(&dir.path().join("out/trajectory.csv")).is_empty());
    let report = json(&dir.path().join("out/report.json"));
    let row = &report["checks"][0];
    assert_eq!(
        (row["name"].as_str(), row["status"].as_str()),
        (Some("flow_completed"), Some("fail"))
    );
}

#[test]
fn cm_sweep_order_is_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_config("limit", &sample("limit_cm.json"), dir.path()).status.code(),
        Some(0)
    );
    let order = json(&dir.path().join("sweep.json"))["fitted_order"].as_f64().unwrap();
    assert!((0.85..=1.15).contains(&order), "{order}");
    assert_eq!(csv_rows(&dir.path().join("sweep.csv")).len(), 3);
}

#[test]
fn single_point_sweep_has_no_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_text(
        "limit",
        r#"{"schema_version": 1, "params": {"sweep": "cm", "values": [0.01], "z": [0.37, 0.21],
            "cm": {"q": [-0.3, 0.3], "p": [0.2, -0.1], "g": 1, "lattice": {"kind": "elliptic", "tau": [0, 1]}}}}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&dir.path().join("out/sweep.json"))["fitted_order"].is_null());
}

#[test]
fn degeneration_sweep_decreases() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_config("limit", &sample("limit_degeneration.json"), dir.path())
            .status
            .code(),
        Some(0)
    );
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    let tail: Vec<f64> = rows.iter().filter(|r| r[0] >= 5.0).map(|r| r[1]).collect();
    assert_eq!(tail.len(), 3);
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-13), "{tail:?}");
    assert!(*tail.last().unwrap() < 1e-8);
}

#[test]
fn lax_summary_matches_matrix() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_config("lax", &sample("lax.json"), dir.path()).status.code(),
        Some(0)
    );
    let rows = csv_rows(&dir.path().join("matrix.csv"));
    assert_eq!(rows.len(), 9);
    let (mut tr_re, mut tr_im) = (0.0, 0.0);
    for r in rows.iter().filter(|r| r[0] == r[1]) {
        tr_re += r[2];
        tr_im += r[3];
    }
    let summary = json(&dir.path().join("lax.json"));
    let eig = summary["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 3);
    let sum_re: f64 = eig.iter().map(|e| e["re"].as_f64().unwrap()).sum();
    let sum_im: f64 = eig.iter().map(|e| e["im"].as_f64().unwrap()).sum();
    assert!((sum_re - tr_re).abs() < 1e-10 && (sum_im - tr_im).abs() < 1e-10);
    assert!((summary["trace"]["re"].as_f64().unwrap() - tr_re).abs() < 1e-14);
}

#[test]
fn reduction_writes_both_pairs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_config("reduce", &sample("reduce.json"), dir.path()).status.code(),
        Some(0)
    );
    for f in ["x.csv", "y.csv", "dual_x.csv", "dual_y.csv"] {
        assert_eq!(csv_rows(&dir.path().join(f)).len(), 16, "{f}");
    }
    let summary = json(&dir.path().join("reduce.json"));
    assert_eq!(summary["dual_positions"].as_array().unwrap().len(), 4);
}

#[test]
fn missing_family_data_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_text(
        "lax",
        r#"{"schema_version": 1, "params": {"family": "hasegawa", "z": 0.3}}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.rs"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mismatch = run_text("lax", r#"{"schema_version": 1, "command": "verify"}"#, dir.path());
    assert_eq!(mismatch.status.code(), Some(2));
    let version = run_text("verify", r#"{"schema_version": 2}"#, dir.path());
    assert_eq!(version.status.code(), Some(2));
    let missing = rslax(&["verify", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = rslax(&["plot", "--config", "x.json"]);
    assert_eq!(unknown.status.code(), Some(2));
    let unknown_check = run_text(
        "verify",
        r#"{"schema_version": 1, "params": {"checks": ["nope"]}}"#,
        dir.path(),
    );
    assert_eq!(unknown_check.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"schema_version": 1, "params": {"checks": []}}"#).unwrap();
    let out = run_config("verify", &config, &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_override_and_check_subset() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"schema_version": 1, "seed": 1, "params": {"checks": ["legendre_relation", "classical_cauchy"]}}"#,
    )
    .unwrap();
    let out = rslax(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["seed"], 7);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["legendre_relation", "classical_cauchy"]);
    assert!(report.get("wall_time_s").is_none());
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"schema_version": 1, "params": {"checks": ["legendre_relation"]}}"#,
    )
    .unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rslax"))
            .args([
                "verify",
                "--config",
                config.to_str().unwrap(),
                "--out",
                dir.path().to_str().unwrap(),
            ])
            .env("RSLAX_THREADS", threads)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(0));
    assert_eq!(run("zero"), Some(2));
}
