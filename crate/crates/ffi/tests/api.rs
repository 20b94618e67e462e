use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use bruhat_control_ffi::*;

const DIAG: &str = r#"{"p":5,"precision":1,"group":"SL2","generators":[[["5","0"],["0","1/5"]]]}"#;
const DIAG_ROT: &str = r#"{"p":5,"precision":1,"group":"SL2","generators":[[["5","0"],["0","1/5"]],[[0,1],[-1,0]]]}"#;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { bc_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bc_last_error_message()) }.to_str().unwrap().to_string()
}

fn new_analysis(spec: &str) -> (BcStatus, *mut BcAnalysis) {
    let c = CString::new(spec).unwrap();
    let mut a = ptr::null_mut();
    let st = unsafe { bc_analysis_new(c.as_ptr(), 0, &mut a) };
    (st, a)
}

#[test]
fn analysis_lifecycle() {
    for (spec, count, order) in [(DIAG, 2, 1), (DIAG_ROT, 1, 2)] {
        let (st, a) = new_analysis(spec);
        assert_eq!(st, BcStatus::Ok);
        let mut n = 0usize;
        assert_eq!(unsafe { bc_analysis_control_set_count(a, &mut n) }, BcStatus::Ok);
        assert_eq!(n, count);
        assert_eq!(unsafe { bc_analysis_weyl_subgroup_order(a, &mut n) }, BcStatus::Ok);
        assert_eq!(n, order);
        let mut ok = false;
        assert_eq!(unsafe { bc_analysis_consistent(a, &mut ok) }, BcStatus::Ok);
        assert!(ok);
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { bc_analysis_report_json(a, &mut s) }, BcStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(unsafe { bc_analysis_dot(a, &mut s) }, BcStatus::Ok);
        assert!(take(s).starts_with("digraph orbit {"));
        unsafe { bc_analysis_free(a) };
    }
}

#[test]
fn error_codes() {
    let (st, a) = new_analysis("{");
    assert_eq!(st, BcStatus::Parse);
    assert!(a.is_null());
    assert!(last_error().contains("spec"));

    let (st, _) = new_analysis(&DIAG.replace("\"p\":5", "\"p\":4"));
    assert_eq!(st, BcStatus::Parse);
    assert!(last_error().contains("not prime"));

    let (st, _) = new_analysis(&DIAG.replace("1/5", "1/25"));
    assert_eq!(st, BcStatus::InvalidInput);
    assert!(last_error().contains("generators[0]"));

    let mut n = 0usize;
    assert_eq!(unsafe { bc_analysis_control_set_count(ptr::null(), &mut n) }, BcStatus::NullPointer);
    assert_eq!(unsafe { bc_analysis_new(ptr::null(), 0, &mut ptr::null_mut()) }, BcStatus::NullPointer);
    let bad = [0xffu8, 0];
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { bc_analysis_new(bad.as_ptr() as *const c_char, 0, &mut a) }, BcStatus::InvalidUtf8);
    unsafe {
        bc_analysis_free(ptr::null_mut());
        bc_string_free(ptr::null_mut());
    }
}

#[test]
fn scalar_helpers() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { bc_padic_from_rational(5, 3, 1, 3, &mut s) }, BcStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(v["digits"], serde_json::json!([2, 3, 1]));
    assert_eq!(unsafe { bc_padic_from_rational(5, 3, 1, 0, &mut s) }, BcStatus::InvalidInput);

    let m = CString::new("[[0,1],[-1,0]]").unwrap();
    assert_eq!(unsafe { bc_tree_classify(5, m.as_ptr(), &mut s) }, BcStatus::Ok);
    assert!(take(s).contains("Elliptic"));
    let m = CString::new(r#"[["1/25",0],[0,25]]"#).unwrap();
    assert_eq!(unsafe { bc_tree_classify(5, m.as_ptr(), &mut s) }, BcStatus::Ok);
    assert!(take(s).contains("\"translation_length\":4"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/bruhat_control.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct BcAnalysis BcAnalysis;"));
}
