//! C ABI for the souschef runtime.
//!
//! A runtime is an opaque `SouschefRuntime*` created by
//! `souschef_runtime_new` and released with `souschef_runtime_free`. Every
//! fallible call returns a `SouschefStatus`; on failure the reason is
//! available from `souschef_last_error_message` on the same thread. Strings
//! returned by the library must be released with `souschef_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use souschef::api::{Ack, Command, LogCategory};
use souschef::plant::SimScript;
use souschef::{Config, Runtime};

/// Opaque runtime handle.
pub struct SouschefRuntime {
    inner: Runtime,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SouschefStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Rejected = 4,
    Io = 5,
    Panic = 6,
}

/// Plain-data view of the latest telemetry snapshot. `setpoint` is NaN
/// when the controller has no setpoint.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SouschefTelemetry {
    pub tick: u64,
    pub time: f64,
    pub pan_temp: f64,
    pub setpoint: f64,
    pub power: f64,
    pub servo_angle: f64,
    pub stopped: bool,
    pub pan_present: bool,
    pub recipe_complete: bool,
    pub active_warnings: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SouschefStatus, message: impl Into<String>) -> SouschefStatus {
    set_error(message);
    status
}

/// Run `f`, turning panics into `SouschefStatus::Panic`.
fn guard(f: impl FnOnce() -> SouschefStatus) -> SouschefStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SouschefStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SouschefStatus> {
    if p.is_null() {
        return Err(fail(SouschefStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SouschefStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn runtime<'a>(rt: *mut SouschefRuntime) -> Result<&'a mut Runtime, SouschefStatus> {
    rt.as_mut()
        .map(|r| &mut r.inner)
        .ok_or_else(|| fail(SouschefStatus::NullArgument, "null runtime handle"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Create a runtime with the bundled recipes and an in-memory event log.
/// `config_toml` may be NULL for defaults.
///
/// # Safety
/// `config_toml` must be NULL or a NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_new(
    config_toml: *const c_char,
    out: *mut *mut SouschefRuntime,
) -> SouschefStatus {
    guard(|| {
        if out.is_null() {
            return fail(SouschefStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let config = if config_toml.is_null() {
            Config::default()
        } else {
            let text = tri!(read_str(config_toml));
            match Config::from_toml(text) {
                Ok(c) => c,
                Err(e) => return fail(SouschefStatus::InvalidArgument, e.to_string()),
            }
        };
        match Runtime::with_defaults(config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SouschefRuntime { inner }));
                SouschefStatus::Ok
            }
            Err(e) => fail(SouschefStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `rt` must be NULL or a handle from `souschef_runtime_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_free(rt: *mut SouschefRuntime) {
    if !rt.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| {
            let mut boxed = Box::from_raw(rt);
            boxed.inner.shutdown();
        }));
    }
}

/// Validate and store a recipe document. On rejection the error message
/// lists every diagnostic.
///
/// # Safety
/// `rt` must be a live handle and `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_load_recipe_json(
    rt: *mut SouschefRuntime,
    json: *const c_char,
) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        let text = tri!(read_str(json));
        match rt.gate().recipes().put_json(text, None) {
            Ok(_) => SouschefStatus::Ok,
            Err(e) => fail(SouschefStatus::Rejected, e.to_string()),
        }
    })
}

/// Replace the plant script driving the simulated world.
///
/// # Safety
/// `rt` must be a live handle and `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_load_script_json(
    rt: *mut SouschefRuntime,
    json: *const c_char,
) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        let text = tri!(read_str(json));
        let script = match SimScript::from_json(text) {
            Ok(s) => s,
            Err(e) => return fail(SouschefStatus::InvalidArgument, e.to_string()),
        };
        match rt.load_script(script) {
            Ok(()) => SouschefStatus::Ok,
            Err(e) => fail(SouschefStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Submit a command, e.g. `{"kind":"set_setpoint","celsius":100}`. The
/// command takes effect on the next step. `out_id` may be NULL.
///
/// # Safety
/// `rt` must be a live handle, `json` a NUL-terminated string and `out_id`
/// NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_post_command_json(
    rt: *mut SouschefRuntime,
    json: *const c_char,
    out_id: *mut u64,
) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        let text = tri!(read_str(json));
        let cmd: Command = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(SouschefStatus::InvalidArgument, e.to_string()),
        };
        match rt.gate().submit(cmd) {
            Ack::Accepted { id } => {
                if !out_id.is_null() {
                    *out_id = id;
                }
                SouschefStatus::Ok
            }
            Ack::Rejected { reason } => fail(SouschefStatus::Rejected, reason),
        }
    })
}

/// Advance `ticks` control ticks.
///
/// # Safety
/// `rt` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_step(rt: *mut SouschefRuntime, ticks: u64) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        for _ in 0..ticks {
            if let Err(e) = rt.step() {
                return fail(SouschefStatus::InvalidArgument, e.to_string());
            }
        }
        SouschefStatus::Ok
    })
}

/// # Safety
/// `rt` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_telemetry(
    rt: *mut SouschefRuntime,
    out: *mut SouschefTelemetry,
) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        if out.is_null() {
            return fail(SouschefStatus::NullArgument, "null output pointer");
        }
        let s = rt.snapshot();
        *out = SouschefTelemetry {
            tick: s.tick,
            time: s.time,
            pan_temp: s.pan_temp,
            setpoint: s.setpoint.unwrap_or(f64::NAN),
            power: s.power,
            servo_angle: s.servo_angle,
            stopped: s.stopped,
            pan_present: s.pan_present,
            recipe_complete: s.recipe_complete,
            active_warnings: s.active_warnings.len() as u32,
        };
        SouschefStatus::Ok
    })
}

/// Full snapshot as JSON. Returns NULL on error; free with
/// `souschef_string_free`.
///
/// # Safety
/// `rt` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_telemetry_json(rt: *mut SouschefRuntime) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let rt = tri!(runtime(rt));
        let text = serde_json::to_string(rt.snapshot()).expect("snapshot serializes");
        match CString::new(text) {
            Ok(c) => {
                result = c.into_raw();
                SouschefStatus::Ok
            }
            Err(_) => fail(SouschefStatus::InvalidUtf8, "snapshot contains NUL"),
        }
    });
    result
}

/// Number of event-log entries in `category` (e.g. "transition").
///
/// # Safety
/// `rt` must be a live handle, `category` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn souschef_runtime_log_count(
    rt: *mut SouschefRuntime,
    category: *const c_char,
    out: *mut u64,
) -> SouschefStatus {
    guard(|| {
        let rt = tri!(runtime(rt));
        let name = tri!(read_str(category));
        if out.is_null() {
            return fail(SouschefStatus::NullArgument, "null output pointer");
        }
        let category: LogCategory = match name.parse() {
            Ok(c) => c,
            Err(e) => return fail(SouschefStatus::InvalidArgument, e),
        };
        *out = rt.log().read().expect("event log poisoned").count(category) as u64;
        SouschefStatus::Ok
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn souschef_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn souschef_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn souschef_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
