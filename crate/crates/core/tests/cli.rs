use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mixlab::grid::{mixed_level, GridSpec, Pattern, TracerField};

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .args(args)
        .output()
        .expect("spawn mixlab")
}

fn write_manifest(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const MINIMAL: &str = r#"{
    "version": 1, "m": 4, "stages": 1,
    "initial": {"kind": "pattern", "pattern": "left_right_halves"},
    "blocks": [{"kind": "interleave"}]
}"#;

#[test]
fn minimal_manifest_writes_two_measurement_rows() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path(), "min.json", MINIMAL);
    let out = dir.path().join("out");
    let res = mixlab(&["run", &manifest, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("measurements.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("n,t,G"));
    assert_eq!(rows.len(), 3);
    assert!(csv.starts_with("# manifest-sha256: "));
    assert!(out.join("snapshots/snapshot_000.field").exists());
    assert!(out.join("snapshots/snapshot_001.field").exists());
}

#[test]
fn two_interleave_stages_mix_halves_at_level_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL
        .replace("\"m\": 4, \"stages\": 1", "\"m\": 6, \"stages\": 2");
    let manifest = write_manifest(dir.path(), "fig.json", &body);
    let out = dir.path().join("fig");
    let res = mixlab(&["run", &manifest, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let snap = TracerField::read(&out.join("snapshots/snapshot_002.field")).unwrap();
    assert_eq!(mixed_level(&snap), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "version": 1, "m": 6, "stages": 3,
        "initial": {"kind": "random"}, "seed": 9,
        "blocks": [{"kind": "interleave"}],
        "budget": {"kind": "palenstrophy", "B": 1, "s": 2, "p": 2}
    }"#;
    let manifest = write_manifest(dir.path(), "r.json", body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = mixlab(&["run", &manifest, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["measurements.csv", "schedule.csv", "decay.svg", "snapshots/snapshot_003.field"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn malformed_manifest_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL.replace("\"stages\": 1", "\"stages\": 1, \"colour\": 3");
    let manifest = write_manifest(dir.path(), "bad.json", &body);
    let res = mixlab(&["run", &manifest, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn too_coarse_grid_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL.replace("\"m\": 4, \"stages\": 1", "\"m\": 3, \"stages\": 4");
    let manifest = write_manifest(dir.path(), "coarse.json", &body);
    let res = mixlab(&["run", &manifest, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn sobolev_on_velocity_free_block_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "version": 1, "m": 5, "stages": 2,
        "initial": {"kind": "pattern", "pattern": "top_bottom_halves"},
        "blocks": [{"kind": "baker"}],
        "budget": {"kind": "explicit", "times": [0, 1, 2]},
        "diagnostics": {"sobolev": true}
    }"#;
    let manifest = write_manifest(dir.path(), "baker.json", body);
    let res = mixlab(&["run", &manifest, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn schedule_prints_dyadic_palenstrophy_times() {
    let res = mixlab(&[
        "schedule", "--s", "2", "--budget", "1", "--stages", "4", "--norm", "1",
    ]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let times: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(times, vec![0.0, 1.0, 3.0, 7.0, 15.0]);
}

#[test]
fn measure_reports_the_mixed_level() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cb.field");
    TracerField::pattern(GridSpec::new(5).unwrap(), Pattern::Checkerboard(3))
        .unwrap()
        .write(&path, &[])
        .unwrap();
    let res = mixlab(&["measure", "--field", path.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["mixed_level"], 2);
    assert!(v["geometric"]["value"].as_f64().unwrap() > 0.0);
    assert!(v["hminus1"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_oracle_suite_passes_and_unknown_suite_fails() {
    let res = mixlab(&["verify", "oracle"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(mixlab(&["verify", "nope"]).status.code(), Some(2));
}
