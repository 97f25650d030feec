use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use intcur_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = intcur_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(spec: &str) -> *mut IntcurDocument {
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { intcur_document_generate(c(spec).as_ptr(), &mut doc) }, IntcurStatus::Ok);
    doc
}

fn chain(doc: *const IntcurDocument, name: &str, in_target: bool) -> *mut IntcurCurrent {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { intcur_document_chain(doc, c(name).as_ptr(), in_target, &mut t) }, IntcurStatus::Ok);
    t
}

#[test]
fn disk_mass_boundary_and_pushforward() {
    unsafe {
        let doc = generate(r#"{"kind":"disk","n_segments":64}"#);
        let t = chain(doc, "T", false);
        let (mut m, mut dim) = (0.0, 0);
        assert_eq!(intcur_current_mass(t, &mut m), IntcurStatus::Ok);
        assert_eq!(intcur_current_dim(t, &mut dim), IntcurStatus::Ok);
        assert_eq!(dim, 2);
        assert!((m - 32.0 * (std::f64::consts::PI / 32.0).sin()).abs() < 1e-12);

        let mut bd = ptr::null_mut();
        assert_eq!(intcur_current_boundary(t, &mut bd), IntcurStatus::Ok);
        let (mut len, mut size) = (0.0, 0);
        intcur_current_mass(bd, &mut len);
        intcur_current_support_size(bd, &mut size);
        assert_eq!(size, 64);
        assert!((len - 128.0 * (std::f64::consts::PI / 64.0).sin()).abs() < 1e-12);

        let mut flat = 0.0;
        assert_eq!(intcur_current_flat_norm(bd, &mut flat), IntcurStatus::Ok);
        assert!((flat - m).abs() < 1e-9, "flat {flat} vs area {m}");

        let mut psi = ptr::null_mut();
        assert_eq!(intcur_document_map(doc, c("psi").as_ptr(), &mut psi), IntcurStatus::Ok);
        let mut pushed = ptr::null_mut();
        assert_eq!(intcur_pushforward(doc, psi, t, &mut pushed), IntcurStatus::Ok);
        let mut pm = 0.0;
        intcur_current_mass(pushed, &mut pm);
        assert!((pm - m).abs() < 1e-12);

        for h in [t, bd, pushed] {
            intcur_current_free(h);
        }
        intcur_map_free(psi);
        intcur_document_free(doc);
    }
}

#[test]
fn split_disks_verdict_and_report() {
    unsafe {
        let doc = generate(r#"{"kind":"split_disks","n_segments":32}"#);
        let (t, ball) = (chain(doc, "T", false), chain(doc, "ball", true));
        let mut psi = ptr::null_mut();
        intcur_document_map(doc, c("psi").as_ptr(), &mut psi);
        let mut v = IntcurVerdict::ConsistentWithIsometry;
        let mut report = ptr::null_mut();
        assert_eq!(intcur_rigidity_check(t, psi, ball, 256, 7, &mut v, &mut report), IntcurStatus::Ok);
        assert_eq!(v, IntcurVerdict::HypothesesViolated);
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(json["verdict"]["hypotheses"], serde_json::json!([3]));
        assert!(json["distortion"]["max_distortion"].as_f64().unwrap() >= 2.0 - 1e-3);
        intcur_string_free(report);
        intcur_current_free(t);
        intcur_current_free(ball);
        intcur_map_free(psi);
        intcur_document_free(doc);
    }
}

#[test]
fn json_round_trip_through_the_abi() {
    unsafe {
        let doc = generate(r#"{"kind":"annulus","eps":0.3,"n_segments":32}"#);
        let mut text = ptr::null_mut();
        assert_eq!(intcur_document_to_json(doc, &mut text), IntcurStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(intcur_document_parse(text, &mut again), IntcurStatus::Ok);
        let mut text2 = ptr::null_mut();
        intcur_document_to_json(again, &mut text2);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text2));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        std::fs::write(&path, CStr::from_ptr(text).to_bytes()).unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(intcur_document_load(c(path.to_str().unwrap()).as_ptr(), &mut loaded), IntcurStatus::Ok);

        intcur_string_free(text);
        intcur_string_free(text2);
        for d in [doc, again, loaded] {
            intcur_document_free(d);
        }
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut doc = ptr::null_mut();
        assert_eq!(intcur_document_load(ptr::null(), &mut doc), IntcurStatus::NullArgument);
        assert!(last_error().contains("path"));
        assert_eq!(intcur_document_parse(c("{\"version\": \"1\",\n \"mesh\": 3}").as_ptr(), &mut doc), IntcurStatus::Format);
        assert!(last_error().contains("line 2"));
        assert_eq!(intcur_document_load(c("/nonexistent/x.json").as_ptr(), &mut doc), IntcurStatus::Format);
        assert_eq!(intcur_document_generate(c(r#"{"kind":"annulus","eps":1.5,"n_segments":32}"#).as_ptr(), &mut doc), IntcurStatus::Input);
        assert!(doc.is_null());

        let d = generate(r#"{"kind":"disk","n_segments":16}"#);
        let mut t = ptr::null_mut();
        assert_eq!(intcur_document_chain(d, c("nope").as_ptr(), false, &mut t), IntcurStatus::Input);
        assert!(last_error().contains("nope"));
        let bad = [0xffu8, 0];
        assert_eq!(intcur_document_chain(d, bad.as_ptr().cast(), false, &mut t), IntcurStatus::InvalidUtf8);
        let mut m = 0.0;
        assert_eq!(intcur_current_mass(ptr::null(), &mut m), IntcurStatus::NullArgument);

        // Success clears the message.
        let t = chain(d, "T", false);
        assert!(intcur_last_error().is_null());
        intcur_current_free(t);
        intcur_document_free(d);
        intcur_current_free(ptr::null_mut());
    }
}

/// Directory holding this crate's compiled library artifacts.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libintcur_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("C compiler available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}{}", String::from_utf8_lossy(&run.stdout), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("verdict 1"));
}
