// SPDX-License-Identifier: Apache-2.0
//! C ABI over `vgf-core`: opaque harness handles, integer status codes and
//! a thread-local last-error message. The header is generated into
//! `include/vgf.h` by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use vgf_core::bench::find_benchmark;
use vgf_core::fuzzer::{forkserver, run_campaign, CampaignOptions};
use vgf_core::harness::{default_config, load_config, Harness, HarnessConfig};
use vgf_core::hdl::{parse_design, Design, SourceText};
use vgf_core::sim::SimMode;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VgfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Simulation = 5,
    NotFound = 6,
    InvalidArgument = 7,
    Campaign = 8,
    Panic = 9,
}

/// Simulation mode selector for [`vgf_harness_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VgfMode {
    Accurate = 0,
    Fast = 1,
}

impl From<VgfMode> for SimMode {
    fn from(m: VgfMode) -> Self {
        match m {
            VgfMode::Accurate => SimMode::Accurate,
            VgfMode::Fast => SimMode::Fast,
        }
    }
}

/// Opaque harness: an elaborated design, its configuration and one
/// simulator instance reused across runs.
pub struct VgfHarness {
    harness: Harness,
    design: Arc<Design>,
    config: HarnessConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: VgfStatus, msg: impl Into<String>) -> VgfStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping a panic to [`VgfStatus::Panic`].
fn guard(f: impl FnOnce() -> VgfStatus) -> VgfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(VgfStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, VgfStatus> {
    if p.is_null() {
        return Err(fail(VgfStatus::NullArgument, format!("{what} is null")));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(VgfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn build(design: Design, config: HarnessConfig, mode: SimMode) -> Result<Box<VgfHarness>, VgfStatus> {
    let design = Arc::new(design);
    let harness = Harness::new(design.clone(), Arc::new(config.clone()), mode).map_err(|e| fail(VgfStatus::Simulation, e.to_string()))?;
    Ok(Box::new(VgfHarness { harness, design, config }))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length,
/// or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vgf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes and n < len.
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vgf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `design_src` and `config_src` (null selects the default
/// configuration) and creates a harness in `mode`.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn vgf_harness_new(design_src: *const c_char, config_src: *const c_char, mode: VgfMode, out: *mut *mut VgfHarness) -> VgfStatus {
    guard(|| {
        if out.is_null() {
            return fail(VgfStatus::NullArgument, "out is null");
        }
        let src = match str_arg(design_src, "design_src") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let design = match parse_design(&SourceText::new(src, "<ffi>")) {
            Ok(d) => d,
            Err(e) => return fail(VgfStatus::Parse, e.to_string()),
        };
        let config = if config_src.is_null() {
            default_config(&design)
        } else {
            let text = match str_arg(config_src, "config_src") {
                Ok(s) => s,
                Err(s) => return s,
            };
            match load_config(text, &design) {
                Ok(c) => c,
                Err(e) => return fail(VgfStatus::Config, e.to_string()),
            }
        };
        match build(design, config, mode.into()) {
            Ok(h) => {
                *out = Box::into_raw(h);
                VgfStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Creates a harness for a bundled benchmark.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn vgf_harness_from_bench(name: *const c_char, mode: VgfMode, out: *mut *mut VgfHarness) -> VgfStatus {
    guard(|| {
        if out.is_null() {
            return fail(VgfStatus::NullArgument, "out is null");
        }
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let Some(b) = find_benchmark(name) else {
            return fail(VgfStatus::NotFound, format!("unknown benchmark '{name}'"));
        };
        let design = match b.design() {
            Ok(d) => d,
            Err(e) => return fail(VgfStatus::Parse, e.to_string()),
        };
        let config = match b.config(&design) {
            Ok(c) => c,
            Err(e) => return fail(VgfStatus::Config, e.to_string()),
        };
        match build(design, config, mode.into()) {
            Ok(h) => {
                *out = Box::into_raw(h);
                VgfStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Releases a harness. Null is ignored.
///
/// # Safety
/// `h` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vgf_harness_free(h: *mut VgfHarness) {
    if !h.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(Box::from_raw(h));
    }
}

/// Number of signals in the harness's elaborated design.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vgf_harness_signal_count(h: *const VgfHarness) -> usize {
    h.as_ref().map_or(0, |h| h.design.signals.len())
}

/// Resets the design and runs `input`. `status` receives the fork-server
/// verdict: 0 for a clean run, `0xF0 | slot` when property `slot` fired.
///
/// # Safety
/// `h` must be a live handle; `input` must point to `len` readable bytes
/// (it may be null when `len` is 0); `status` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vgf_harness_run(h: *mut VgfHarness, input: *const u8, len: usize, status: *mut u32) -> VgfStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(VgfStatus::NullArgument, "harness is null");
        };
        if status.is_null() || (input.is_null() && len > 0) {
            return fail(VgfStatus::NullArgument, "input or status is null");
        }
        let bytes: &[u8] = if len == 0 {
            &[]
        } else {
            // SAFETY: caller guarantees `len` readable bytes.
            std::slice::from_raw_parts(input, len)
        };
        match h.harness.run(bytes) {
            Ok(v) => {
                *status = forkserver::status(&v.outcome);
                VgfStatus::Ok
            }
            Err(e) => fail(VgfStatus::Simulation, e.to_string()),
        }
    })
}

/// Runs a campaign on the harness's design and configuration. `options_json`
/// holds `CampaignOptions` fields (null or `{}` for defaults); the report
/// JSON is returned in `report`, to be released with [`vgf_string_free`].
///
/// # Safety
/// `h` must be a live handle, `options_json` null or NUL-terminated, and
/// `report` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn vgf_campaign_run(h: *const VgfHarness, options_json: *const c_char, report: *mut *mut c_char) -> VgfStatus {
    guard(|| {
        let Some(h) = h.as_ref() else {
            return fail(VgfStatus::NullArgument, "harness is null");
        };
        if report.is_null() {
            return fail(VgfStatus::NullArgument, "report is null");
        }
        let opts = if options_json.is_null() {
            CampaignOptions::default()
        } else {
            let text = match str_arg(options_json, "options_json") {
                Ok(s) => s,
                Err(s) => return s,
            };
            match options_from_json(text) {
                Ok(o) => o,
                Err(e) => return fail(VgfStatus::InvalidArgument, e),
            }
        };
        match run_campaign(h.design.clone(), &h.config, &opts, None) {
            Ok(r) => match CString::new(r.to_json()) {
                Ok(c) => {
                    *report = c.into_raw();
                    VgfStatus::Ok
                }
                Err(e) => fail(VgfStatus::Campaign, e.to_string()),
            },
            Err(e) => fail(VgfStatus::Campaign, e.to_string()),
        }
    })
}

/// Overlays the fields present in `text` on the default options.
fn options_from_json(text: &str) -> Result<CampaignOptions, String> {
    let patch: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let serde_json::Value::Object(patch) = patch else {
        return Err("options must be a JSON object".into());
    };
    let mut base = serde_json::to_value(CampaignOptions::default()).map_err(|e| e.to_string())?;
    let obj = base.as_object_mut().expect("options serialize as an object");
    for (k, v) in patch {
        if !obj.contains_key(&k) {
            return Err(format!("unknown option '{k}'"));
        }
        obj.insert(k, v);
    }
    serde_json::from_value(base).map_err(|e| e.to_string())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vgf_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by CString::into_raw in this crate.
        drop(CString::from_raw(s));
    }
}
