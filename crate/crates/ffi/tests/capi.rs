// SPDX-License-Identifier: Apache-2.0
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use vgf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { vgf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn bench(name: &str, mode: VgfMode) -> *mut VgfHarness {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { vgf_harness_from_bench(name.as_ptr(), mode, &mut h) }, VgfStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn lock_unlocks_through_the_c_api() {
    let h = bench("lock_case", VgfMode::Accurate);
    let mut status = 7u32;
    let key = [0xA5u8, 0x5A, 0xC3, 0x96];
    assert_eq!(unsafe { vgf_harness_run(h, key.as_ptr(), key.len(), &mut status) }, VgfStatus::Ok);
    assert_eq!(status, 0xF0);
    assert_eq!(unsafe { vgf_harness_run(h, ptr::null(), 0, &mut status) }, VgfStatus::Ok);
    assert_eq!(status, 0);
    assert!(unsafe { vgf_harness_signal_count(h) } >= 4);
    unsafe { vgf_harness_free(h) };
}

#[test]
fn parse_errors_carry_a_message() {
    let src = CString::new("module m(").unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { vgf_harness_new(src.as_ptr(), ptr::null(), VgfMode::Fast, &mut h) };
    assert_eq!(s, VgfStatus::Parse);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { vgf_harness_new(ptr::null(), ptr::null(), VgfMode::Fast, &mut h) },
        VgfStatus::NullArgument
    );
    let mut status = 0;
    assert_eq!(
        unsafe { vgf_harness_run(ptr::null_mut(), ptr::null(), 0, &mut status) },
        VgfStatus::NullArgument
    );
    let name = CString::new("no_such_bench").unwrap();
    assert_eq!(unsafe { vgf_harness_from_bench(name.as_ptr(), VgfMode::Fast, &mut h) }, VgfStatus::NotFound);
    assert!(last_error().contains("no_such_bench"));
    unsafe {
        vgf_harness_free(ptr::null_mut());
        vgf_string_free(ptr::null_mut());
    }
}

#[test]
fn inline_design_with_default_config() {
    let src = CString::new(
        "module t(input clk, input [7:0] d, output reg hit = 1'b0);\n\
         always @(posedge clk) hit <= d == 8'h42;\n\
         p: assert property (hit);\nendmodule\n",
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { vgf_harness_new(src.as_ptr(), ptr::null(), VgfMode::Fast, &mut h) }, VgfStatus::Ok);
    let mut status = 0;
    let input = [0x42u8];
    assert_eq!(unsafe { vgf_harness_run(h, input.as_ptr(), 1, &mut status) }, VgfStatus::Ok);
    assert_eq!(status, 0xF0);
    unsafe { vgf_harness_free(h) };
}

#[test]
fn campaign_report_is_json() {
    let h = bench("counter_trojan", VgfMode::Fast);
    let opts = CString::new(r#"{"exec_budget": 50, "seed": 3}"#).unwrap();
    let mut report: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { vgf_campaign_run(h, opts.as_ptr(), &mut report) }, VgfStatus::Ok);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { vgf_string_free(report) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["design"], "counter_trojan");

    let bad = CString::new(r#"{"no_such_option": 1}"#).unwrap();
    assert_eq!(unsafe { vgf_campaign_run(h, bad.as_ptr(), &mut report) }, VgfStatus::InvalidArgument);
    assert!(last_error().contains("no_such_option"));
    unsafe { vgf_harness_free(h) };
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(vgf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/vgf.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ VgfHarness *h = 0; uint32_t s; return vgf_harness_run(h, 0, 0, &s) == VGF_STATUS_NULL_ARGUMENT ? 0 : 1; }}\n"),
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg(&src).output() else {
        eprintln!("no C compiler; header check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
