//! End-to-end checks of the binary: exit codes, file outputs, slope command.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
}

fn write_config(dir: &Path, out: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let body = serde_json::json!({
        "k": 3,
        "arm_means": [0.8, 0.5, 0.2],
        "reward_law": "bernoulli",
        "delta": 0.2,
        "horizon": 300,
        "replicas": 4,
        "master_seed": 11,
        "suites": ["bandit"],
        "output_dir": out,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

#[test]
fn run_produces_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &out);
    let result = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert!(
        result.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&result.stdout),
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(out.join("bounds.csv").exists());
    assert!(out.join("regret.csv").exists());
    assert!(out.join("summary.json").exists());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("[PASS] suite bandit"));
}

#[test]
fn out_and_seed_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &dir.path().join("ignored"));
    let out = dir.path().join("elsewhere");
    let result = bin()
        .args(["run", "--seed", "77", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(result.status.success());
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"master_seed\": 77"));
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn suite_command_runs_a_single_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &out);
    let result = bin()
        .args(["suite", "bounds", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(result.status.success());
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert!(v["suites"]["bounds"]["pass"].as_bool().unwrap());
    assert!(v["suites"].get("bandit").is_none());
    // no bandit suite, no CSVs
    assert!(!out.join("bounds.csv").exists());
}

#[test]
fn invalid_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"k\": \"three\"\n}").unwrap();
    let result = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("line"), "stderr: {stderr}");
}

#[test]
fn semantically_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let path = dir.path().join("bad.json");
    let mut body = serde_json::json!({
        "k": 3,
        "arm_means": [0.8, 0.5, 0.2],
        "reward_law": "bernoulli",
        "delta": 0.2,
        "horizon": 300,
        "replicas": 4,
        "master_seed": 11,
        "suites": ["bandit"],
        "output_dir": out,
    });
    body["horizon"] = serde_json::json!(2); // shorter than warmup
    std::fs::write(&path, body.to_string()).unwrap();
    let result = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_config_exits_3() {
    let result = bin()
        .args(["run", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn unknown_suite_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &dir.path().join("out"));
    let result = bin()
        .args(["suite", "nonsense", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn slope_command_reads_regret_csv() {
    let dir = tempfile::tempdir().unwrap();
    // Synthetic two-thirds power law across three replicas.
    let mut csv = String::from("replica,t,instant_regret,cumulative_regret\n");
    for replica in 0..3 {
        for i in 1..=60u64 {
            let t = 25 * i;
            let c = 0.9 + 0.1 * replica as f64;
            csv.push_str(&format!("{replica},{t},0,{}\n", c * (t as f64).powf(2.0 / 3.0)));
        }
    }
    let path = dir.path().join("regret.csv");
    std::fs::write(&path, csv).unwrap();
    let result = bin()
        .args(["slope", "--tmin", "25", "--tmax", "1500", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("slope 0.666667"), "stdout: {stdout}");
}

#[test]
fn slope_command_rejects_bad_window() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("regret.csv");
    std::fs::write(&path, "replica,t,instant_regret,cumulative_regret\n0,10,0,1\n").unwrap();
    let result = bin()
        .args(["slope", "--tmin", "100", "--tmax", "500", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}
