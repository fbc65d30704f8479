//! C ABI over `rsi-core`: opaque handles for systems, index reports and policy
//! certificates, status codes matching the `rsi` exit codes, and a per-thread
//! last-error message.
//!
//! Every function returning a status writes its result through an out pointer
//! only on success (and, for synthesis, also when the program is infeasible).
//! Strings returned to the caller must be released with `rsi_string_free`.
//! Indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rsi_core::casestudy::{packaged, Scenario};
use rsi_core::cli::CliError;
use rsi_core::io::{self, IoError, PolicyFile, ReportFile, RunOptions, SystemFile};
use rsi_core::rsi::{compute_report, Backend, BackendChoice, RsiOptions, RsiReport};
use rsi_core::sim::{run_episode, AdversaryModel, Controller, EpisodeStatus};
use rsi_core::synth::{
    synthesize_joint, synthesize_protected, PolicyCertificate, QpFilter, QpFilterOptions, SynthOptions,
};
use rsi_core::system::InterconnectedSystem;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsiStatus {
    Ok = 0,
    InvalidArgument = 1,
    NotApplicable = 2,
    Solver = 3,
    Infeasible = 4,
    Verify = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsiBackend {
    Sos = 0,
    Lp = 1,
    Monotone = 2,
    Grid = 3,
    Auto = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsiController {
    Policy = 0,
    Qp = 1,
    Zero = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsiAdversary {
    UpperCorner = 0,
    LowerCorner = 1,
    Random = 2,
    Greedy = 3,
}

/// An interconnected system together with its stored run options.
pub struct RsiSystem {
    sys: InterconnectedSystem,
    options: RunOptions,
}

/// Index values of one system.
pub struct RsiIndexReport {
    report: RsiReport,
}

/// A synthesized policy certificate.
pub struct RsiPolicy {
    cert: PolicyCertificate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(RsiStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.exit_code() {
            2 => RsiStatus::NotApplicable,
            3 => RsiStatus::Solver,
            4 => RsiStatus::Infeasible,
            5 => RsiStatus::Verify,
            _ => RsiStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_failure_via_cli {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                CliError::from(e).into()
            }
        }
    )*};
}

impl_failure_via_cli!(
    IoError,
    rsi_core::rsi::RsiError,
    rsi_core::synth::SynthError,
    rsi_core::sim::SimError,
    rsi_core::system::SystemError
);

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RsiStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status and the last-error message.
fn guard<F: FnOnce() -> Result<RsiStatus, Failure>>(f: F) -> RsiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RsiStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(RsiStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(s, what)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn rsi_options(options: &RunOptions) -> RsiOptions {
    RsiOptions {
        multiplier_degree: options.multiplier_degree,
        grid_resolution: options.grid_resolution,
        sdp: options.sdp.into(),
        ..RsiOptions::default()
    }
}

/// Message of the last failed call on this thread, or null. Free with `rsi_string_free`.
#[no_mangle]
pub extern "C" fn rsi_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn rsi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a system document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_from_json(json: *const c_char, out: *mut *mut RsiSystem) -> RsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(json, "json")?;
        let file: SystemFile = io::from_json(text, "<json>")?;
        let sys = file.to_system()?;
        *out = Box::into_raw(Box::new(RsiSystem {
            sys,
            options: file.options,
        }));
        Ok(RsiStatus::Ok)
    })
}

/// Loads the packaged three-room system for scenario 1 or 2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_case_study(scenario: u32, out: *mut *mut RsiSystem) -> RsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let sc = Scenario::from_number(scenario).ok_or_else(|| invalid(format!("unknown scenario {scenario}")))?;
        let file: SystemFile = io::from_json(packaged(sc), "packaged")?;
        let sys = file.to_system()?;
        *out = Box::into_raw(Box::new(RsiSystem {
            sys,
            options: file.options,
        }));
        Ok(RsiStatus::Ok)
    })
}

/// # Safety
/// `sys` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_free(sys: *mut RsiSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_num_states(sys: *const RsiSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.sys.num_states())
}

/// Number of inputs, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_num_inputs(sys: *const RsiSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.sys.num_inputs())
}

/// Number of safety constraints, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_system_num_constraints(sys: *const RsiSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.sys.safety().len())
}

/// Computes every intrinsic and coupled index with the given backend.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_compute_report(
    sys: *const RsiSystem,
    backend: RsiBackend,
    out: *mut *mut RsiIndexReport,
) -> RsiStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out, "out")?;
        let s = &*sys;
        let choice = match backend {
            RsiBackend::Sos => BackendChoice::Fixed(Backend::Sos),
            RsiBackend::Lp => BackendChoice::Fixed(Backend::Lp),
            RsiBackend::Monotone => BackendChoice::Fixed(Backend::Monotone),
            RsiBackend::Grid => BackendChoice::Fixed(Backend::Grid),
            RsiBackend::Auto => BackendChoice::Auto,
        };
        let report = compute_report(&s.sys, choice, &rsi_options(&s.options))?;
        *out = Box::into_raw(Box::new(RsiIndexReport { report }));
        Ok(RsiStatus::Ok)
    })
}

/// Intrinsic index of vulnerable sub-system `subsystem` on constraint `constraint`.
///
/// # Safety
/// `report` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_report_gamma(
    report: *const RsiIndexReport,
    subsystem: usize,
    constraint: usize,
    value: *mut f64,
) -> RsiStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(value, "value")?;
        *value = (*report)
            .report
            .gamma(subsystem, constraint)
            .ok_or_else(|| invalid(format!("no gamma for ({subsystem}, {constraint})")))?;
        Ok(RsiStatus::Ok)
    })
}

/// Coupled index of constraint `constraint`.
///
/// # Safety
/// `report` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_report_beta(
    report: *const RsiIndexReport,
    constraint: usize,
    value: *mut f64,
) -> RsiStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(value, "value")?;
        *value = (*report)
            .report
            .beta(constraint)
            .ok_or_else(|| invalid(format!("no beta for constraint {constraint}")))?;
        Ok(RsiStatus::Ok)
    })
}

/// Report document as JSON, or null for a null handle. Free with `rsi_string_free`.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_report_to_json(report: *const RsiIndexReport) -> *mut c_char {
    report.as_ref().map_or(ptr::null_mut(), |r| {
        into_c_string(io::to_json(&ReportFile::from_report(&r.report)))
    })
}

/// # Safety
/// `report` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsi_report_free(report: *mut RsiIndexReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Synthesizes SOS policies for the protected sub-systems. On `RSI_STATUS_INFEASIBLE`
/// the certificate is still returned so that its programs can be inspected.
///
/// # Safety
/// `sys` and `report` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_synthesize(
    sys: *const RsiSystem,
    report: *const RsiIndexReport,
    out: *mut *mut RsiPolicy,
) -> RsiStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(report, "report")?;
        non_null(out, "out")?;
        let s = &*sys;
        let eta = s.options.eta_for(&s.sys)?;
        let alpha = s.options.alpha_for(&s.sys)?;
        let local = s.options.local_for(&s.sys)?;
        let opts = SynthOptions {
            policy_degree: s.options.policy_degree,
            multiplier_degree: s.options.multiplier_degree,
            margin_cap: s.options.margin_cap,
            sdp: s.options.sdp.into(),
            ..SynthOptions::default()
        };
        let r = &(*report).report;
        let cert = if local.is_empty() {
            synthesize_protected(&s.sys, r, &eta, &alpha, &opts)?
        } else {
            synthesize_joint(&s.sys, r, &eta, &alpha, &local, &opts)?
        };
        let feasible = cert.is_feasible();
        *out = Box::into_raw(Box::new(RsiPolicy { cert }));
        if feasible {
            Ok(RsiStatus::Ok)
        } else {
            set_error("policy synthesis is infeasible");
            Ok(RsiStatus::Infeasible)
        }
    })
}

/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_policy_is_feasible(policy: *const RsiPolicy) -> bool {
    policy.as_ref().is_some_and(|p| p.cert.is_feasible())
}

/// Writes the clamped policy inputs at state `x` into `u`; channels of
/// sub-systems without a policy are set to 0.
///
/// # Safety
/// `x` must point to `n` readable values and `u` to `r` writable values.
#[no_mangle]
pub unsafe extern "C" fn rsi_policy_evaluate(
    policy: *const RsiPolicy,
    sys: *const RsiSystem,
    x: *const f64,
    n: usize,
    u: *mut f64,
    r: usize,
) -> RsiStatus {
    guard(|| {
        non_null(policy, "policy")?;
        non_null(sys, "sys")?;
        non_null(x, "x")?;
        non_null(u, "u")?;
        let s = &(*sys).sys;
        if n != s.num_states() || r != s.num_inputs() {
            return Err(invalid(format!(
                "expected {} states and {} inputs",
                s.num_states(),
                s.num_inputs()
            )));
        }
        let xs = std::slice::from_raw_parts(x, n);
        let us = std::slice::from_raw_parts_mut(u, r);
        us.fill(0.0);
        (*policy).cert.apply(s, xs, us);
        Ok(RsiStatus::Ok)
    })
}

/// Policy document as JSON, or null for a null handle. Free with `rsi_string_free`.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsi_policy_to_json(policy: *const RsiPolicy) -> *mut c_char {
    policy.as_ref().map_or(ptr::null_mut(), |p| {
        into_c_string(io::to_json(&PolicyFile::from_certificate(&p.cert)))
    })
}

/// Parses a policy document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsi_policy_from_json(json: *const c_char, out: *mut *mut RsiPolicy) -> RsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let file: PolicyFile = io::from_json(read_str(json, "json")?, "<json>")?;
        *out = Box::into_raw(Box::new(RsiPolicy {
            cert: file.to_certificate()?,
        }));
        Ok(RsiStatus::Ok)
    })
}

/// # Safety
/// `policy` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsi_policy_free(policy: *mut RsiPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Simulates one episode with the stored step settings from `x0` and writes
/// the smallest value of every constraint into `min_h` (`k` entries).
/// `policy` is required by `RSI_CONTROLLER_POLICY`, `report` by `RSI_CONTROLLER_QP`.
///
/// # Safety
/// Handles must be live or null where allowed; `x0` must point to `n` values,
/// `min_h` to `k` writable values and `violated` to one writable bool.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn rsi_simulate(
    sys: *const RsiSystem,
    policy: *const RsiPolicy,
    report: *const RsiIndexReport,
    controller: RsiController,
    adversary: RsiAdversary,
    seed: u64,
    x0: *const f64,
    n: usize,
    min_h: *mut f64,
    k: usize,
    violated: *mut bool,
) -> RsiStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(x0, "x0")?;
        non_null(min_h, "min_h")?;
        non_null(violated, "violated")?;
        let s = &*sys;
        if n != s.sys.num_states() || k != s.sys.safety().len() {
            return Err(invalid(format!(
                "expected {} states and {} constraints",
                s.sys.num_states(),
                s.sys.safety().len()
            )));
        }
        let channels: usize = s.sys.vulnerable().iter().map(|&i| s.sys.subsystems()[i].r).sum();
        let adv = match adversary {
            RsiAdversary::UpperCorner => AdversaryModel::ConstantCorner(vec![true; channels]),
            RsiAdversary::LowerCorner => AdversaryModel::ConstantCorner(vec![false; channels]),
            RsiAdversary::Random => AdversaryModel::UniformRandom { seed },
            RsiAdversary::Greedy => AdversaryModel::GreedyWorst,
        };
        let filter;
        let ctrl = match controller {
            RsiController::Zero => Controller::Zero,
            RsiController::Policy => {
                non_null(policy, "policy")?;
                Controller::SosPolicy(&(*policy).cert)
            }
            RsiController::Qp => {
                non_null(report, "report")?;
                let offsets = policy.as_ref().map(|p| p.cert.offsets.clone()).unwrap_or_default();
                filter = QpFilter::new(
                    &s.sys,
                    &(*report).report,
                    &s.options.eta_for(&s.sys)?,
                    &s.options.alpha_for(&s.sys)?,
                    &s.options.local_for(&s.sys)?,
                    &QpFilterOptions {
                        alpha_as_variables: false,
                        offsets,
                    },
                )?;
                Controller::QpFilter(&filter)
            }
        };
        let traj = run_episode(
            &s.sys,
            &ctrl,
            &adv,
            std::slice::from_raw_parts(x0, n),
            &s.options.episode(),
        )?;
        std::slice::from_raw_parts_mut(min_h, k).copy_from_slice(&traj.min_per_constraint());
        *violated = traj.violated();
        if let EpisodeStatus::ControllerInfeasible { step, message } = traj.status {
            set_error(format!("controller infeasible at step {step}: {message}"));
            return Ok(RsiStatus::Infeasible);
        }
        Ok(RsiStatus::Ok)
    })
}
