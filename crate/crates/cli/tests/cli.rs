//! End-to-end checks of the `vanet-sim` binary: every subcommand writes its
//! artifacts and exits zero on clean runs, and bad arguments fail loudly.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vanet-sim"))
}

fn tmp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn assert_files(dir: &Path, names: &[&str]) {
    for name in names {
        let path = dir.join(name);
        assert!(path.is_file(), "missing artifact {}", path.display());
        assert!(
            path.metadata().unwrap().len() > 0,
            "empty artifact {}",
            path.display()
        );
    }
}

const RUN_ARTIFACTS: [&str; 9] = [
    "config.toml",
    "messages.csv",
    "trust.csv",
    "disputes.csv",
    "decisions.csv",
    "ta_drivers.csv",
    "ta_incidents.csv",
    "ta_rulings.csv",
    "summary.txt",
];

#[test]
fn trace_writes_run_artifacts() {
    let out_dir = tmp("trace");
    run_ok(bin()
        .args(["trace", "--scenario", "fig4", "--seed", "1"])
        .arg("--out")
        .arg(&out_dir));
    assert_files(&out_dir, &RUN_ARTIFACTS);

    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("audit: clean"), "summary:\n{summary}");
    let trust = std::fs::read_to_string(out_dir.join("trust.csv")).unwrap();
    assert!(trust.starts_with("time,driver_id,trust,band,cause\n"));
}

#[test]
fn simulate_runs_the_bundled_demo_scenario() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo.toml");
    let out_dir = tmp("simulate");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .args(["--seed", "3"])
        .arg("--out")
        .arg(&out_dir));
    assert_files(&out_dir, &RUN_ARTIFACTS);
}

#[test]
fn sweep_writes_grid_and_summary() {
    let out_dir = tmp("sweep");
    run_ok(bin()
        .args([
            "sweep",
            "--scenario",
            "fig5",
            "--densities",
            "10",
            "--p-values",
            "0.0,1.0",
            "--modes",
            "true",
            "--seeds",
            "1,2",
        ])
        .arg("--out")
        .arg(&out_dir));
    assert_files(&out_dir, &["sweep.csv", "sweep_summary.csv"]);

    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    // Header plus one row per (density, p, mode, seed) combination.
    assert_eq!(csv.lines().count(), 1 + 4, "sweep rows:\n{csv}");
}

#[test]
fn compare_writes_grid_and_summary() {
    let out_dir = tmp("compare");
    run_ok(bin()
        .args([
            "compare",
            "--scenario",
            "fig6",
            "--timers",
            "30,45",
            "--densities",
            "10",
            "--seeds",
            "1",
        ])
        .arg("--out")
        .arg(&out_dir));
    assert_files(&out_dir, &["compare.csv", "compare_summary.csv"]);

    let csv = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    // One proposed run plus one baseline run per timer.
    assert_eq!(csv.lines().count(), 1 + 3, "compare rows:\n{csv}");
}

#[test]
fn unknown_scenario_name_fails() {
    let out = bin()
        .args(["trace", "--scenario", "fig9"])
        .arg("--out")
        .arg(tmp("bad"))
        .output()
        .expect("binary runs");
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("fig4"), "stderr should name the supported scenario: {stderr}");
}

#[test]
fn missing_config_file_fails() {
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(tmp("does-not-exist.toml"))
        .arg("--out")
        .arg(tmp("missing"))
        .output()
        .expect("binary runs");
    assert!(!out.status.success());
}
