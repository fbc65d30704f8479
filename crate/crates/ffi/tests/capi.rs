use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rsi_ffi::*;

fn last_error() -> String {
    let p = rsi_last_error_message();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { rsi_string_free(p) };
    s
}

struct Scenario1 {
    sys: *mut RsiSystem,
    report: *mut RsiIndexReport,
    policy: *mut RsiPolicy,
}

impl Scenario1 {
    fn new() -> Self {
        let mut sys = ptr::null_mut();
        let mut report = ptr::null_mut();
        let mut policy = ptr::null_mut();
        unsafe {
            assert_eq!(rsi_system_case_study(1, &mut sys), RsiStatus::Ok);
            assert_eq!(rsi_compute_report(sys, RsiBackend::Sos, &mut report), RsiStatus::Ok);
            assert_eq!(rsi_synthesize(sys, report, &mut policy), RsiStatus::Ok);
        }
        Scenario1 { sys, report, policy }
    }
}

impl Drop for Scenario1 {
    fn drop(&mut self) {
        unsafe {
            rsi_policy_free(self.policy);
            rsi_report_free(self.report);
            rsi_system_free(self.sys);
        }
    }
}

#[test]
fn case_study_pipeline_through_handles() {
    let s = Scenario1::new();
    unsafe {
        assert_eq!(rsi_system_num_states(s.sys), 3);
        assert_eq!(rsi_system_num_inputs(s.sys), 3);
        assert_eq!(rsi_system_num_constraints(s.sys), 1);
        let mut gamma = 0.0;
        let mut beta = 0.0;
        assert_eq!(rsi_report_gamma(s.report, 0, 0, &mut gamma), RsiStatus::Ok);
        assert_eq!(rsi_report_beta(s.report, 0, &mut beta), RsiStatus::Ok);
        assert!(gamma <= -12.0 + 1e-5 && gamma > -12.01, "{gamma}");
        assert!(beta <= -28.125 + 1e-5 && beta > -28.2, "{beta}");
        assert!(rsi_policy_is_feasible(s.policy));

        let x = [15.0, 15.0, 15.0];
        let mut u = [f64::NAN; 3];
        assert_eq!(
            rsi_policy_evaluate(s.policy, s.sys, x.as_ptr(), 3, u.as_mut_ptr(), 3),
            RsiStatus::Ok
        );
        assert_eq!(u[0], 0.0);
        assert!(u[1..].iter().all(|v| (-2.0..=2.0).contains(v)));

        let mut min_h = [0.0];
        let mut violated = true;
        let status = rsi_simulate(
            s.sys,
            s.policy,
            s.report,
            RsiController::Qp,
            RsiAdversary::Random,
            7,
            x.as_ptr(),
            3,
            min_h.as_mut_ptr(),
            1,
            &mut violated,
        );
        assert_eq!(status, RsiStatus::Ok);
        assert!(!violated);
        assert!(min_h[0] >= -1e-3);
    }
}

#[test]
fn json_round_trip_of_policy() {
    let s = Scenario1::new();
    unsafe {
        let json = rsi_policy_to_json(s.policy);
        assert!(!json.is_null());
        let mut back = ptr::null_mut();
        assert_eq!(rsi_policy_from_json(json, &mut back), RsiStatus::Ok);
        let again = rsi_policy_to_json(back);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(again));
        rsi_string_free(json);
        rsi_string_free(again);
        rsi_policy_free(back);

        let report = rsi_report_to_json(s.report);
        assert!(CStr::from_ptr(report).to_str().unwrap().contains("\"rsi_report\""));
        rsi_string_free(report);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(rsi_system_case_study(3, &mut sys), RsiStatus::InvalidArgument);
        assert!(sys.is_null());
        assert!(last_error().contains("scenario"));

        let bad = CString::new("{\"version\": 1, \"kind\": \"policy\"}").unwrap();
        assert_eq!(rsi_system_from_json(bad.as_ptr(), &mut sys), RsiStatus::InvalidArgument);
        assert!(last_error().contains("system"));

        assert_eq!(rsi_system_from_json(ptr::null(), &mut sys), RsiStatus::NullPointer);

        let mut report = ptr::null_mut();
        assert_eq!(
            rsi_compute_report(ptr::null(), RsiBackend::Sos, &mut report),
            RsiStatus::NullPointer
        );

        assert_eq!(rsi_system_case_study(1, &mut sys), RsiStatus::Ok);
        assert_eq!(
            rsi_compute_report(sys, RsiBackend::Lp, &mut report),
            RsiStatus::NotApplicable
        );
        assert!(report.is_null());
        let mut v = 0.0;
        assert_eq!(rsi_report_beta(ptr::null(), 0, &mut v), RsiStatus::NullPointer);
        rsi_system_free(sys);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        rsi_system_free(ptr::null_mut());
        rsi_report_free(ptr::null_mut());
        rsi_policy_free(ptr::null_mut());
        rsi_string_free(ptr::null_mut());
        assert_eq!(rsi_system_num_states(ptr::null()), 0);
        assert!(!rsi_policy_is_feasible(ptr::null()));
        assert!(rsi_policy_to_json(ptr::null()).is_null());
    }
    let v = unsafe { CStr::from_ptr(rsi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rsi.h")).unwrap();
    for name in [
        "rsi_system_from_json",
        "rsi_compute_report",
        "rsi_synthesize",
        "rsi_simulate",
        "rsi_last_error_message",
        "rsi_string_free",
        "typedef struct RsiSystem RsiSystem",
        "RSI_STATUS_INFEASIBLE = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles a C program against the header and the static library when a C compiler is present.
#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    // CARGO_TARGET_TMPDIR is <target>/tmp; the library sits in the profile directory.
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("librsi_ffi.a");
    if !lib.exists() {
        eprintln!("static library not found at {}; skipped", lib.display());
        return;
    }
    let exe = tmp.join("rsi_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    let gamma: f64 = fields[0].parse().unwrap();
    assert!((gamma + 12.0).abs() < 1e-3, "{text}");
}
