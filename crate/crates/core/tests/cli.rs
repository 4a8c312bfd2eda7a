mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::repo_path;
use taloskit::cli::{EXIT_NOT_CONVERGED, EXIT_OK, EXIT_REPLAY_MISMATCH, EXIT_USAGE};

fn run(args: &[&str], cwd: &Path) -> (u8, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_taloskit"))
        .args(args)
        .current_dir(cwd)
        .env("TALOSKIT_CACHE_DIR", cwd.join("cache"))
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap() as u8, text)
}

fn mission(name: &str) -> String {
    repo_path(&format!("data/missions/{name}"))
        .display()
        .to_string()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[], dir.path()).0, EXIT_USAGE);
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(
        &["propagate", "--config", "nowhere.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
    assert!(text.contains("nowhere.json"), "{text}");
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("malformed/negative_dry_mass.json");
    let (code, text) = run(
        &["propagate", "--config", &config, "--out", "o"],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
    assert!(text.contains("cubesat.dry_mass"), "{text}");
}

#[test]
fn zero_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("cubesat_no_comms.json");
    let (code, _) = run(
        &["propagate", "--config", &config, "--dt", "0", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn missing_panel_sidecar_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = repo_path("data/meshes/cubesat_3u.stl")
        .display()
        .to_string();
    let (code, text) = run(
        &[
            "illuminate",
            "--mesh",
            &mesh,
            "--panels",
            "absent.panels",
            "--out-prefix",
            "p_",
        ],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
    assert!(text.contains("absent.panels: file not found"), "{text}");
}

#[test]
fn comm_without_stations_explains_itself() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("cubesat_no_comms.json");
    let (code, text) = run(&["comm", "--config", &config, "--out", "c.csv"], dir.path());
    assert_eq!(code, EXIT_USAGE);
    assert!(text.contains("empty groundstations map"), "{text}");
}

#[test]
fn attitude_rejects_wrong_inertia_count() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(
        &["attitude", "--inertia", "1,2", "--out", "a.csv"],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn attitude_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(
        &[
            "attitude",
            "--inertia",
            "2,2,3",
            "--duration-orbits",
            "0.1",
            "--out",
            "a.csv",
        ],
        dir.path(),
    );
    assert_eq!(code, EXIT_OK, "{text}");
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("t,wx,wy,wz,nutation_deg,orthonormality_drift\n"));
    assert!(dir.path().join("a.csv.manifest.json").exists());
}

#[test]
fn truncated_optimization_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("visors_like.json");
    let (code, text) = run(
        &[
            "optimize",
            "--config",
            &config,
            "--max-outer",
            "1",
            "--out-prefix",
            "o_",
        ],
        dir.path(),
    );
    assert_eq!(code, EXIT_NOT_CONVERGED, "{text}");
    let csv = fs::read_to_string(dir.path().join("o_convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn windowless_optimization_converges() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("vt_no_windows.json");
    let (code, text) = run(
        &["optimize", "--config", &config, "--out-prefix", "o_"],
        dir.path(),
    );
    assert_eq!(code, EXIT_OK, "{text}");
}

#[test]
fn replay_detects_tampered_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = mission("comm_four_stations.json");
    let (code, text) = run(
        &[
            "comm",
            "--config",
            &config,
            "--duration-orbits",
            "0.2",
            "--out",
            "c.csv",
        ],
        dir.path(),
    );
    assert_eq!(code, EXIT_OK, "{text}");
    let (code, text) = run(&["replay", "--manifest", "c.csv.manifest.json"], dir.path());
    assert_eq!(code, EXIT_OK, "{text}");
    assert!(!text.contains("DIFFERS"));

    // Replay reruns the command, so corrupt the recorded hash instead.
    let manifest = dir.path().join("c.csv.manifest.json");
    let mut json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    json["outputs"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    fs::write(&manifest, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    let (code, text) = run(&["replay", "--manifest", "c.csv.manifest.json"], dir.path());
    assert_eq!(code, EXIT_REPLAY_MISMATCH, "{text}");
    assert!(text.contains("DIFFERS"), "{text}");
}
