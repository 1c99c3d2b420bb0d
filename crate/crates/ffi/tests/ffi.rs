use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use souschef_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = souschef_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_runtime() -> *mut SouschefRuntime {
    let mut rt = ptr::null_mut();
    let status = unsafe { souschef_runtime_new(ptr::null(), &mut rt) };
    assert_eq!(status, SouschefStatus::Ok);
    assert!(!rt.is_null());
    rt
}

#[test]
fn setpoint_command_heats_the_pan() {
    let rt = new_runtime();
    let mut id = 0u64;
    let cmd = c(r#"{"kind":"set_setpoint","celsius":80}"#);
    unsafe {
        assert_eq!(souschef_runtime_post_command_json(rt, cmd.as_ptr(), &mut id), SouschefStatus::Ok);
        assert_ne!(id, u64::MAX);
        assert_eq!(souschef_runtime_step(rt, 3000), SouschefStatus::Ok);

        let mut t = SouschefTelemetry::default();
        assert_eq!(souschef_runtime_telemetry(rt, &mut t), SouschefStatus::Ok);
        assert_eq!(t.tick, 3000);
        assert!((t.time - 300.0).abs() < 1e-9);
        assert_eq!(t.setpoint, 80.0);
        assert!(t.pan_temp > 40.0, "pan at {}", t.pan_temp);
        assert!((0.0..=1.0).contains(&t.power));

        let json = souschef_runtime_telemetry_json(rt);
        assert!(!json.is_null());
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(v["tick"], 3000);
        souschef_string_free(json);

        let mut n = 0u64;
        let cat = c("command");
        assert_eq!(souschef_runtime_log_count(rt, cat.as_ptr(), &mut n), SouschefStatus::Ok);
        assert_eq!(n, 1);
        souschef_runtime_free(rt);
    }
}

#[test]
fn fresh_runtime_has_no_setpoint() {
    let rt = new_runtime();
    let mut t = SouschefTelemetry::default();
    unsafe {
        assert_eq!(souschef_runtime_telemetry(rt, &mut t), SouschefStatus::Ok);
        souschef_runtime_free(rt);
    }
    assert!(t.setpoint.is_nan());
    assert_eq!(t.tick, 0);
}

#[test]
fn rejections_carry_a_reason() {
    let rt = new_runtime();
    unsafe {
        let out_of_range = c(r#"{"kind":"set_power","fraction":1.5}"#);
        let s = souschef_runtime_post_command_json(rt, out_of_range.as_ptr(), ptr::null_mut());
        assert_eq!(s, SouschefStatus::Rejected);
        assert_eq!(last_error(), "fraction out of range");

        let garbage = c("{not json");
        let s = souschef_runtime_post_command_json(rt, garbage.as_ptr(), ptr::null_mut());
        assert_eq!(s, SouschefStatus::InvalidArgument);

        let bad_recipe = c(r#"{"schema_version":1,"id":"x","title":"x","vocabulary":[],"states":[]}"#);
        assert_eq!(souschef_runtime_load_recipe_json(rt, bad_recipe.as_ptr()), SouschefStatus::Rejected);
        assert!(!last_error().is_empty());

        let bad_category = c("nonsense");
        let mut n = 0;
        assert_eq!(
            souschef_runtime_log_count(rt, bad_category.as_ptr(), &mut n),
            SouschefStatus::InvalidArgument
        );
        souschef_runtime_free(rt);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        assert_eq!(souschef_runtime_new(ptr::null(), ptr::null_mut()), SouschefStatus::NullArgument);
        assert_eq!(souschef_runtime_step(ptr::null_mut(), 1), SouschefStatus::NullArgument);
        assert!(souschef_runtime_telemetry_json(ptr::null_mut()).is_null());

        let mut rt = ptr::null_mut();
        let bad = c("[control]\ntick_hz = -1\n");
        assert_eq!(souschef_runtime_new(bad.as_ptr(), &mut rt), SouschefStatus::InvalidArgument);
        assert!(rt.is_null());

        let rt = new_runtime();
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            souschef_runtime_load_script_json(rt, invalid.as_ptr().cast()),
            SouschefStatus::InvalidUtf8
        );
        souschef_runtime_free(rt);
        souschef_runtime_free(ptr::null_mut());
        souschef_string_free(ptr::null_mut());
    }
}

#[test]
fn recipe_follows_scripted_milestones() {
    let rt = new_runtime();
    unsafe {
        let script = c(r#"{"events":[
            {"t":1,"type":"set_milestone","args":{"label":"pan_on"}},
            {"t":15,"type":"set_milestone","args":{"label":"add_water"}},
            {"t":16,"type":"add_water","args":{"kg":1.0}}
        ]}"#);
        assert_eq!(souschef_runtime_load_script_json(rt, script.as_ptr()), SouschefStatus::Ok);
        for cmd in [r#"{"kind":"load_recipe","id":"pasta"}"#, r#"{"kind":"start_recipe"}"#] {
            let cmd = c(cmd);
            assert_eq!(
                souschef_runtime_post_command_json(rt, cmd.as_ptr(), ptr::null_mut()),
                SouschefStatus::Ok
            );
        }
        assert_eq!(souschef_runtime_step(rt, 400), SouschefStatus::Ok);
        let mut n = 0;
        let cat = c("transition");
        assert_eq!(souschef_runtime_log_count(rt, cat.as_ptr(), &mut n), SouschefStatus::Ok);
        // initial entry, then pan_on and add_water
        assert_eq!(n, 3);
        souschef_runtime_free(rt);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(souschef_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/souschef.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "souschef_runtime_new",
        "souschef_runtime_free",
        "souschef_runtime_post_command_json",
        "souschef_runtime_step",
        "souschef_runtime_telemetry",
        "souschef_last_error_message",
        "souschef_string_free",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler, syntax check skipped");
        return;
    };
    assert!(status.success());
}
