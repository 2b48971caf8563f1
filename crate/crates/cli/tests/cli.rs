//! End-to-end checks of the `shakhov` binary: exit codes, report shape, and
//! the CSV output contract.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shakhov"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shakhov-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn no_arguments_is_a_usage_error() {
    let status = bin().status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_two() {
    let dir = temp_dir("badcfg");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "nonsense_key = 1\n").unwrap();
    let out = bin().arg("verify-operator").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nonsense_key"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_operator_passes_on_the_default_grid() {
    let dir = temp_dir("verify-ok");
    let cfg = dir.join("default.cfg");
    std::fs::write(&cfg, "seed = 7\n").unwrap();
    let out = bin().arg("verify-operator").arg(&cfg).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("conservation-mass"));
    assert!(stdout.contains("cancellation-rq(pr=1.0000)"));
    assert!(stdout.contains("all "), "stdout: {stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_operator_reports_underresolved_grids() {
    let dir = temp_dir("verify-coarse");
    let cfg = dir.join("coarse.cfg");
    std::fs::write(&cfg, "n_v = 8\nv_max = 4\n").unwrap();
    let out = bin().arg("verify-operator").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("checks failed"), "stdout: {stdout}");
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_reports_are_deterministic_per_seed() {
    let dir = temp_dir("verify-det");
    let cfg = dir.join("small.cfg");
    let report = dir.join("report.txt");
    std::fs::write(&cfg, "n_v = 12\nv_max = 5\nseed = 3\n").unwrap();
    let a = bin()
        .arg("verify-linear")
        .arg(&cfg)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    let b = bin().arg("verify-linear").arg(&cfg).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    // the written report carries the effective configuration echo
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("# effective configuration"));
    assert!(text.contains("# n_v = 12"));
    // --seed overrides the config value
    let c = bin()
        .arg("verify-linear")
        .arg(&cfg)
        .arg("--seed")
        .arg("9")
        .output()
        .unwrap();
    let header = String::from_utf8_lossy(&c.stdout);
    assert!(header.contains("seed = 9"), "stdout: {header}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = temp_dir("run");
    let cfg_path = dir.join("run.cfg");
    let csv_path = dir.join("diag.csv");
    std::fs::write(
        &cfg_path,
        "n_v = 8\nv_max = 4\nt_end = 0.2\ndt = 0.01\noutput_every = 5\n\
         ic.kind = heat-flux-mode\nic.amplitude = 0.001\nic.mode = 0\n",
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("conservation drift"));
    assert!(stdout.contains("H-functional"));
    assert!(stdout.contains("third-moment total drift"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), shakhov_core::diagnostics::CSV_HEADER);
    // 0.2 / 0.01 = 20 steps, one record per 5 steps plus the initial one
    assert_eq!(lines.count(), 5);
    std::fs::remove_dir_all(&dir).ok();
}
