//! End-to-end checks of the binary: flag handling, file emission, byte
//! determinism, and the self-check exit behavior.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_majorant"))
}

#[test]
fn check_subcommand_passes() {
    let out = bin().arg("check").output().unwrap();
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all invariant checks passed"));
}

#[test]
fn run_emits_csv_with_expected_columns() {
    let out = bin()
        .args(["run", "--grids", "4,8", "--no-timing"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("grid,J_minus,J_plus,"));
    assert!(header.ends_with("minres_iters,wall_seconds"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn run_is_byte_deterministic_without_timing() {
    let run = || {
        bin()
            .args(["run", "--grids", "4,8", "--no-timing"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn config_file_plus_flag_overrides() {
    let dir = std::env::temp_dir().join(format!("majorant-cli-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.conf");
    fs::write(
        &config,
        "# tiny run\ngrids = 4\nlambda = 0.01\ntiming = off\nformat = json\n",
    )
    .unwrap();
    let json_path = dir.join("report.json");
    let out = bin()
        .args([
            "run",
            "--config",
            config.to_str().unwrap(),
            "--grids",
            "4,8",
            "--out",
            json_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let json = fs::read_to_string(&json_path).unwrap();
    let rows: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2, "flag override must win over config grids");
    assert_eq!(rows[0]["grid"], 4);
    assert!(rows[0]["J_minus"].as_f64().unwrap() <= rows[0]["J_plus"].as_f64().unwrap());

    // Reformat the saved JSON as a table.
    let out = bin()
        .args(["table", "--in", json_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().next().unwrap().contains("J_minus"));
    assert_eq!(table.lines().count(), 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_arguments_exit_with_error() {
    let out = bin().args(["run", "--grids", "8,4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grids"));

    let out = bin()
        .args(["run", "--constrained", "--grids", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "constrained without bounds");
}

#[test]
fn constrained_run_works_via_flags() {
    let out = bin()
        .args([
            "run",
            "--grids",
            "4",
            "--constrained",
            "--ua",
            "0",
            "--ub",
            "15",
            "--no-timing",
            "--format",
            "table",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    // Indices need the exact optimum, which box constraints invalidate.
    assert!(text.contains("nan"));
}
