use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pfc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn last_value(csv: &Path) -> f64 {
    let text = fs::read_to_string(csv).unwrap();
    text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn verify_pair_a_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["verify", "--pair", "a"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], Value::Bool(true));
    assert!(dir.path().join("verify.meta.json").exists());
}

#[test]
fn verify_without_pair_reports_youla_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["verify", "--plant", "pendulum-position", "--pair", "none"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not strongly stabilizable"));
}

#[test]
fn verify_broken_pair_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.json");
    fs::write(
        &file,
        r#"{"c": {"num": [1.0], "den": [-1.0, 1.0]}, "p": {"num": [0.0], "den": [1.0, 1.0]}}"#,
    )
    .unwrap();
    let o = pfc(&["verify", "--pair-file", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn malformed_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{\"num\": [1.0]").unwrap();
    let plant = format!("file:{}", file.display());
    assert_eq!(pfc(&["verify", "--plant", &plant], dir.path()).status.code(), Some(2));
    assert_eq!(pfc(&["verify", "--pair-file", file.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(pfc(&["verify", "--plant", "file:/nonexistent.json"], dir.path()).status.code(), Some(2));
    assert_eq!(pfc(&["verify", "--plant", "bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn synthesize_order_zero_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pfc(&["synthesize", "--n", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn synthesize_on_custom_plant() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plant.json");
    fs::write(&file, r#"{"num": [1.0], "den": [-1.0, 1.0]}"#).unwrap();
    let plant = format!("file:{}", file.display());
    let args = ["synthesize", "--plant", &plant, "--n", "1", "--seed", "1", "--generations", "100", "--population", "60"];
    let o = pfc(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("synthesis.json")).unwrap()).unwrap();
    assert!(json["best_f"].as_f64().unwrap() < 0.0);
    assert_eq!(json["seed"], Value::from(1));
    let history = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(history.starts_with("generation,best_F\n"));
    assert_eq!(history.lines().count(), 102);

    // The found pair verifies through the pair-file path.
    let pair = dir.path().join("pair.json");
    let v = pfc(&["verify", "--plant", &plant, "--pair-file", pair.to_str().unwrap()], dir.path());
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn step_settles_to_final_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["step", "--pair", "b", "--t-end", "60"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let y = last_value(&dir.path().join("step.csv"));
    assert!((y - 10.0 / 3.0).abs() < 0.01 * 10.0 / 3.0, "{y}");
}

#[test]
fn bad_time_step_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pfc(&["step", "--dt", "-1"], dir.path()).status.code(), Some(2));
}

#[test]
fn angle_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["angle", "--pair", "b", "--t-end", "60"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(last_value(&dir.path().join("angle.csv")).abs() < 1e-3);
    let o = pfc(
        &["angle", "--model", "nonlinear", "--theta0", "0.01", "--u-step", "0", "--t-end", "5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("position.csv").exists());
    assert_eq!(pfc(&["angle", "--plant", "pendulum-angle"], dir.path()).status.code(), Some(2));
}

#[test]
fn modern_prints_q() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["modern"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Q = (10s^2 - 10) / (3s^4 + 18s^3 + 45s^2 + 54s + 30)"), "{text}");
    assert!(text.contains("K_b = (9s^3 + 29s^2 + 27s + 15) / (5s^2 - 5)  [improper, unstable]"), "{text}");
    assert!(text.contains("K_f = (3s^4 - 13s^2) / (3s^4 + 18s^3 + 35s^2 + 54s + 40)  [proper, stable]"), "{text}");
    assert!(dir.path().join("modern.json").exists());
}

#[test]
fn robustness_count_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfc(&["robustness", "--pair", "b", "--trials", "1000", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("robustness.json")).unwrap()).unwrap();
    let n = json["unstable_count"].as_u64().unwrap();
    assert!((15..=90).contains(&n), "{n}");
    let cloud = fs::read_to_string(dir.path().join("robustness_cloud.csv")).unwrap();
    assert!(cloud.starts_with("trial,re,im\n"));
    assert_eq!(cloud.lines().count(), 1 + 1000 * 10);
}

#[test]
fn fragility_and_noise_run() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pfc(&["fragility", "--pair", "a", "--trials", "200"], dir.path()).status.code(), Some(0));
    assert!(dir.path().join("fragility_cloud.csv").exists());
    assert_eq!(pfc(&["noise", "--count", "100", "--t-end", "5"], dir.path()).status.code(), Some(0));
    for k in 1..=6 {
        assert!(dir.path().join(format!("noise_e{k}.csv")).exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (cmd, files) in [
        (vec!["bode", "--pair", "a"], vec!["bode.csv", "bode_e3.csv", "peaks.json"]),
        (vec!["fragility", "--pair", "b", "--trials", "200", "--seed", "5"], vec!["fragility.json", "fragility_cloud.csv"]),
        (vec!["noise", "--count", "50", "--t-end", "3", "--seed", "2"], vec!["noise_e1.csv", "noise_input.csv"]),
    ] {
        assert_eq!(pfc(&cmd, a.path()).status.code(), Some(0));
        assert_eq!(pfc(&cmd, b.path()).status.code(), Some(0));
        for f in files {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pfc"))
        .args(["verify", "--pair", "b"])
        .env("PFC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("verify.json").exists());
}
