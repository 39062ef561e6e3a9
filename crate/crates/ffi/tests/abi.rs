use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mixlab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        mixlab_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn pattern_measure_and_free() {
    unsafe {
        let mut f: *mut MixlabField = ptr::null_mut();
        assert_eq!(
            mixlab_field_pattern(6, MixlabPattern::Checkerboard, 2, &mut f),
            MixlabStatus::Ok
        );
        assert_eq!(mixlab_field_m(f), 6);
        let mut level = 0;
        assert_eq!(mixlab_field_mixed_level(f, &mut level), MixlabStatus::Ok);
        assert_eq!(level, 1);
        let mut g = 0.0;
        assert_eq!(mixlab_geometric_mixing_scale(f, 0.5, &mut g), MixlabStatus::Ok);
        assert!(g > 0.0 && g < 1.0);
        let mut h = 0.0;
        assert_eq!(mixlab_functional_mixing_scale(f, 2, &mut h), MixlabStatus::Ok);
        assert!(h > 0.0);
        let mut vals = vec![0.0; 4096];
        assert_eq!(mixlab_field_values(f, vals.as_mut_ptr(), vals.len()), MixlabStatus::Ok);
        assert_eq!(vals.iter().sum::<f64>(), 0.0);
        assert_eq!(
            mixlab_field_values(f, vals.as_mut_ptr(), 10),
            MixlabStatus::InvalidArgument
        );
        mixlab_field_free(f);
        mixlab_field_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut f: *mut MixlabField = ptr::null_mut();
        assert_eq!(
            mixlab_field_pattern(3, MixlabPattern::Stripes, 5, &mut f),
            MixlabStatus::ResolutionTooCoarse
        );
        assert!(f.is_null());
        assert!(last_error().contains("level 5"));
        assert_eq!(
            mixlab_field_pattern(3, MixlabPattern::Stripes, 1, ptr::null_mut()),
            MixlabStatus::NullPointer
        );
        let signs = [1i8, 1, 1, 1];
        assert_eq!(
            mixlab_field_from_signs(1, signs.as_ptr(), 4, &mut f),
            MixlabStatus::NotMeanZero
        );
        let mut out = 0.0;
        assert_eq!(
            mixlab_geometric_mixing_scale(ptr::null(), 0.5, &mut out),
            MixlabStatus::NullPointer
        );
    }
}

#[test]
fn flow_stages_through_handles() {
    unsafe {
        let mut f: *mut MixlabField = ptr::null_mut();
        assert_eq!(
            mixlab_field_pattern(5, MixlabPattern::LeftRightHalves, 0, &mut f),
            MixlabStatus::Ok
        );
        let blocks = CString::new(r#"[{"kind":"interleave"},{"kind":"interleave"}]"#).unwrap();
        let mut flow: *mut MixlabFlow = ptr::null_mut();
        assert_eq!(mixlab_flow_new(f, 1, blocks.as_ptr(), &mut flow), MixlabStatus::Ok);
        assert_eq!(mixlab_flow_compose_stage(flow, 1), MixlabStatus::StageOrder);
        assert_eq!(mixlab_flow_compose_stage(flow, 0), MixlabStatus::Ok);
        assert_eq!(mixlab_flow_compose_stage(flow, 1), MixlabStatus::Ok);
        let mut state: *mut MixlabField = ptr::null_mut();
        assert_eq!(mixlab_flow_state(flow, &mut state), MixlabStatus::Ok);
        let mut level = 0;
        mixlab_field_mixed_level(state, &mut level);
        assert_eq!(level, 2);
        let bad = CString::new(r#"[{"kind":"whirl"}]"#).unwrap();
        let mut other: *mut MixlabFlow = ptr::null_mut();
        assert_eq!(
            mixlab_flow_new(f, 1, bad.as_ptr(), &mut other),
            MixlabStatus::InvalidArgument
        );
        mixlab_field_free(state);
        mixlab_flow_free(flow);
        mixlab_field_free(f);
    }
}

#[test]
fn field_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("f.field").to_str().unwrap()).unwrap();
    unsafe {
        let vals: Vec<f64> = (0..16).map(|k| k as f64 - 7.5).collect();
        let mut f: *mut MixlabField = ptr::null_mut();
        assert_eq!(mixlab_field_from_values(2, vals.as_ptr(), 16, &mut f), MixlabStatus::Ok);
        assert_eq!(mixlab_field_write(f, path.as_ptr()), MixlabStatus::Ok);
        let mut g: *mut MixlabField = ptr::null_mut();
        assert_eq!(mixlab_field_read(path.as_ptr(), &mut g), MixlabStatus::Ok);
        let mut back = vec![0.0; 16];
        mixlab_field_values(g, back.as_mut_ptr(), 16);
        assert_eq!(back, vals);
        mixlab_field_free(f);
        mixlab_field_free(g);
    }
}

#[test]
fn run_manifest_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(
        &manifest,
        r#"{"version": 1, "m": 4, "stages": 1,
            "initial": {"kind": "pattern", "pattern": "left_right_halves"},
            "blocks": [{"kind": "interleave"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let (mp, op) = (
        CString::new(manifest.to_str().unwrap()).unwrap(),
        CString::new(out.to_str().unwrap()).unwrap(),
    );
    unsafe {
        assert_eq!(mixlab_run_manifest(mp.as_ptr(), op.as_ptr()), MixlabStatus::Ok);
    }
    assert!(out.join("measurements.csv").exists());
    std::fs::write(&manifest, r#"{"version": 1, "m": 4}"#).unwrap();
    unsafe {
        assert_eq!(
            mixlab_run_manifest(mp.as_ptr(), op.as_ptr()),
            MixlabStatus::InvalidArgument
        );
    }
}

#[test]
fn proof_constants_and_version() {
    let (mut eta, mut omega, mut c) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(
            mixlab_proof_constants(0.5, 0.25, &mut eta, &mut omega, &mut c),
            MixlabStatus::Ok
        );
        assert_eq!(eta, 3.0 * std::f64::consts::PI / 512.0);
        assert_eq!(omega, 3f64.sqrt() / 2.0);
        assert_eq!(
            mixlab_proof_constants(1.5, 0.25, &mut eta, &mut omega, &mut c),
            MixlabStatus::InvalidArgument
        );
        let v = CStr::from_ptr(mixlab_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

/// Compiles a small C program against the generated header and the static
/// library. Skipped when no C compiler or static archive is available.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("mixlab.h").exists());
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let archive = profile_dir.join("libmixlab_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static archive or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "mixlab.h"
int main(void) {
    MixlabField *f = NULL;
    if (mixlab_field_pattern(5, MIXLAB_PATTERN_CHECKERBOARD, 1, &f) != MIXLAB_STATUS_OK) return 1;
    int32_t level = -2;
    mixlab_field_mixed_level(f, &level);
    double g = 0.0;
    if (mixlab_geometric_mixing_scale(f, 0.5, &g) != MIXLAB_STATUS_OK) return 2;
    mixlab_field_free(f);
    if (mixlab_field_pattern(2, MIXLAB_PATTERN_STRIPES, 4, &f) != MIXLAB_STATUS_RESOLUTION_TOO_COARSE) return 3;
    char msg[128];
    mixlab_last_error_message(msg, sizeof msg);
    printf("%d %.6f %s\n", level, g, msg);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0 "), "{text}");
}
