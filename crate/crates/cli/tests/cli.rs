use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_limbswing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn shipped_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, patch: impl FnOnce(&mut Value)) -> PathBuf {
    let mut config = read_json(&shipped_config("biped12_run.json"));
    patch(&mut config);
    let path = dir.join("config.json");
    fs::write(&path, config.to_string()).unwrap();
    path
}

fn optimize(dir: &Path, config: &Path) -> Output {
    run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn check_model_builtin_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "check-model",
        "--model",
        "biped12",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("check_report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["samples"], 1000);
}

const SINGLE_BODY: &str = r#"<robot name="brick">
  <link name="body">
    <inertial><mass value="3"/><inertia ixx="0.2" ixy="0.01" ixz="0" iyy="0.3" iyz="0" izz="IZZ"/></inertial>
  </link>
</robot>"#;

fn single_body(dir: &Path, izz: &str) -> PathBuf {
    let path = dir.join("brick.urdf");
    fs::write(&path, SINGLE_BODY.replace("IZZ", izz)).unwrap();
    fs::write(
        dir.join("brick.meta.json"),
        r#"{"left_foot": "body", "right_foot": "body"}"#,
    )
    .unwrap();
    path
}

#[test]
fn check_model_single_body_passes() {
    let dir = tempfile::tempdir().unwrap();
    let model = single_body(dir.path(), "0.4");
    let out = run(&["check-model", "--model", model.to_str().unwrap(), "--samples", "50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn corrupted_inertia_fails_at_parse() {
    let dir = tempfile::tempdir().unwrap();
    let model = single_body(dir.path(), "-0.4");
    let out = run(&["check-model", "--model", model.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("inertia"));
    assert!(out.stdout.is_empty());
}

#[test]
fn optimize_shipped_config_lands_upright() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize(dir.path(), &shipped_config("biped12_run.json"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["result.json", "gamma.json", "flight.csv", "report.txt"] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let result = read_json(&dir.path().join("result.json"));
    let angle = result["playback"]["touchdown_angle"].as_f64().unwrap();
    assert!(angle < 0.05, "touchdown angle {angle}");
    let residuals = result["constraint_residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 14);
    assert!(residuals.iter().all(|r| r.as_f64().unwrap().abs() < 1e-6));
    assert_eq!(result["gamma"]["gamma"].as_array().unwrap().len(), 12);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("touchdown angle"));
    assert!(report.contains("solve wall time"));
}

#[test]
fn playback_reproduces_flight_csv_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize(dir.path(), &shipped_config("biped12_run.json"));
    assert_eq!(code(&out), 0);
    let replay = dir.path().join("replay");
    let out = run(&[
        "playback",
        "--config",
        dir.path().join("result.json").to_str().unwrap(),
        "--gamma",
        dir.path().join("gamma.json").to_str().unwrap(),
        "--out",
        replay.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("flight.csv")).unwrap(),
        fs::read(replay.join("flight.csv")).unwrap()
    );
}

#[test]
fn repeated_solves_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = shipped_config("biped12_run.json");
    assert_eq!(code(&optimize(a.path(), &config)), 0);
    assert_eq!(code(&optimize(b.path(), &config)), 0);
    for file in ["gamma.json", "flight.csv"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap()
        );
    }
}

fn zero_gamma(dir: &Path, t_f: f64) -> PathBuf {
    let names = [
        "left_hip_yaw",
        "left_hip_roll",
        "left_hip_pitch",
        "left_knee",
        "left_ankle_pitch",
        "left_ankle_roll",
        "right_hip_yaw",
        "right_hip_roll",
        "right_hip_pitch",
        "right_knee",
        "right_ankle_pitch",
        "right_ankle_roll",
    ];
    let gamma = serde_json::json!({
        "degree": 3,
        "t_f": t_f,
        "joint_names": names,
        "gamma": vec![vec![0.0; 4]; names.len()],
    });
    let path = dir.join("zero_gamma.json");
    fs::write(&path, gamma.to_string()).unwrap();
    path
}

#[test]
fn zero_trajectory_keeps_orientation_and_column_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |c| c["n_verify"] = 51.into());
    let gamma = zero_gamma(dir.path(), 0.31);
    let out = run(&[
        "playback",
        "--config",
        config.to_str().unwrap(),
        "--gamma",
        gamma.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("flight.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    let (limbs, n) = (2, 12);
    assert_eq!(header.len(), 11 + 3 * limbs + 2 * n);
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let quat: Vec<f64> = (1..5).map(|i| record[i].parse().unwrap()).collect();
        assert_eq!(quat, vec![1.0, 0.0, 0.0, 0.0]);
        rows += 1;
    }
    // Samples at both ends of 51 steps.
    assert_eq!(rows, 52);
}

#[test]
fn horizon_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |_| {});
    let gamma = zero_gamma(dir.path(), 0.2);
    let out = run(&[
        "playback",
        "--config",
        config.to_str().unwrap(),
        "--gamma",
        gamma.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn zero_flight_time_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |c| c["t_f"] = 0.0.into());
    let out = optimize(dir.path(), &config);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("result.json").exists());
}

#[test]
fn unreachable_target_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |c| {
        c["p_stance_td_target"] = serde_json::json!([2.0, 0.1, -0.78])
    });
    let out = optimize(dir.path(), &config);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of reach"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "optimize",
        "--config",
        shipped_config("biped12_run.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--n-verify",
        "101",
        "--seed",
        "17",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result = read_json(&dir.path().join("result.json"));
    assert_eq!(result["config"]["n_verify"], 101);
    assert_eq!(result["config"]["literal_constraint_3"], false);
    assert_eq!(result["manifest"]["seed"], 17);
    assert_eq!(result["playback"]["steps"], 101);
}

#[test]
fn literal_liftoff_reading_is_infeasible_for_shipped_targets() {
    // The literal reading pairs the liftoff foot with the touchdown CoM; no
    // trajectory satisfies that together with the shipped targets.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "optimize",
        "--config",
        shipped_config("biped12_run.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--literal-constraint-3",
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("could not be satisfied"));
}

#[test]
fn bench_reports_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench",
        "--config",
        shipped_config("biped12_run.json").to_str().unwrap(),
        "--repeats",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("bench.json"));
    assert_eq!(report["repeats"], 3);
    assert_eq!(report["deterministic"], true);
    let (median, p95) = (
        report["median_ms"].as_f64().unwrap(),
        report["p95_ms"].as_f64().unwrap(),
    );
    assert!(median > 0.0 && median <= p95);
    assert!(report["machine"]["arch"].is_string());
}

#[test]
fn zero_repeats_rejected() {
    let out = run(&[
        "bench",
        "--config",
        shipped_config("biped12_run.json").to_str().unwrap(),
        "--repeats",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}
