//! C ABI over the `cellpower` library.
//!
//! Libraries and netlists are opaque heap handles released with their
//! `_free` function. Every fallible call returns an [`LpStatus`]; on failure
//! [`lp_last_error_message`] describes the error for the calling thread.
//! Strings handed out by this crate are released with [`lp_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cellpower::activity::parse_activity;
use cellpower::library::CornerName;
use cellpower::optimizer::format_assignment;
use cellpower::{
    builtin_reference_library, load_library, optimize_leakage, parse_netlist, propagate_probabilities, save_library,
    AnalysisError, Analyzer, Conditions, LeakageSource, Library, ModelError, Netlist, Strictness,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Library text failed to parse or validate.
    LibraryError = 3,
    /// Netlist or activity text has diagnostics.
    Diagnostics = 4,
    /// Operating point or model parameters out of range.
    DomainError = 5,
    /// Problem too large for an exhaustive routine.
    CapacityError = 6,
    AnalysisError = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpCorner {
    Tt = 0,
    Ff = 1,
    Ss = 2,
    Fs = 3,
    Sf = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpLeakageSource {
    /// Device-model scaling of the table values.
    Model = 0,
    /// Stacked-cell leakage taken verbatim from the table.
    Table = 1,
}

/// Analysis conditions. Fill with [`lp_conditions_reference`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConditions {
    pub vdd: f64,
    pub frequency_hz: f64,
    pub temperature_k: f64,
    pub corner: LpCorner,
    /// Threshold override in volts; NaN keeps the library's nominal value.
    pub vth0: f64,
    pub leakage_source: LpLeakageSource,
    /// Short-circuit power as a fraction of switching power.
    pub k_sc: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LpEstimate {
    pub p_switching_w: f64,
    pub p_short_circuit_w: f64,
    pub p_leakage_w: f64,
    pub p_total_w: f64,
    pub critical_delay_ns: f64,
    pub area_um2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LpOptimizeResult {
    pub leakage_w: f64,
    pub critical_delay_ns: f64,
    pub moves_accepted: u32,
    pub feasible: bool,
}

/// Opaque cell library.
pub struct LpLibrary {
    inner: Library,
}

/// Opaque parsed netlist.
pub struct LpNetlist {
    inner: Netlist,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(LpStatus, String);

fn analysis_status(e: &AnalysisError) -> LpStatus {
    match e {
        AnalysisError::Model(ModelError::Capacity { .. }) => LpStatus::CapacityError,
        AnalysisError::Model(_) => LpStatus::DomainError,
        AnalysisError::Library(_) => LpStatus::LibraryError,
        AnalysisError::Instance { source, .. } => analysis_status(source),
        _ => LpStatus::AnalysisError,
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure(analysis_status(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LpStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LpStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(LpStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(LpStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(LpStatus::NullArgument, format!("{what} is null")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn conditions(lib: &Library, c: &LpConditions) -> Conditions {
    let name = match c.corner {
        LpCorner::Tt => CornerName::TT,
        LpCorner::Ff => CornerName::FF,
        LpCorner::Ss => CornerName::SS,
        LpCorner::Fs => CornerName::FS,
        LpCorner::Sf => CornerName::SF,
    };
    let mut cond = Conditions::reference(lib);
    cond.op.vdd = c.vdd;
    cond.op.frequency = c.frequency_hz;
    cond.op.temperature_k = c.temperature_k;
    cond.corner = lib.corner(name);
    cond.vth0 = (!c.vth0.is_nan()).then_some(c.vth0);
    cond.leakage_source = match c.leakage_source {
        LpLeakageSource::Model => LeakageSource::Model,
        LpLeakageSource::Table => LeakageSource::Table,
    };
    cond
}

/// Message for the last failed call on this thread. Empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn lp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates the built-in reference library.
///
/// # Safety
/// `out_lib` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lp_library_builtin(out_lib: *mut *mut LpLibrary) -> LpStatus {
    guard(|| {
        let slot = out(out_lib, "out_lib")?;
        *slot = Box::into_raw(Box::new(LpLibrary { inner: builtin_reference_library() }));
        Ok(())
    })
}

/// Loads a library from JSON text. With `lenient` set, unknown keys are
/// tolerated.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_lib` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lp_library_from_json(json: *const c_char, lenient: bool, out_lib: *mut *mut LpLibrary) -> LpStatus {
    guard(|| {
        let slot = out(out_lib, "out_lib")?;
        *slot = ptr::null_mut();
        let strictness = if lenient { Strictness::Lenient } else { Strictness::Strict };
        let (lib, _) = load_library(text(json, "json")?, strictness)
            .map_err(|e| Failure(LpStatus::LibraryError, e.to_string()))?;
        *slot = Box::into_raw(Box::new(LpLibrary { inner: lib }));
        Ok(())
    })
}

/// Serializes a library to JSON. Free the result with [`lp_string_free`].
///
/// # Safety
/// `lib` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lp_library_to_json(lib: *const LpLibrary, out_json: *mut *mut c_char) -> LpStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = to_c_string(save_library(&deref(lib, "lib")?.inner));
        Ok(())
    })
}

/// # Safety
/// `lib` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lp_library_free(lib: *mut LpLibrary) {
    if !lib.is_null() {
        drop(Box::from_raw(lib));
    }
}

/// Conditions at the library's reference point, typical corner, model
/// leakage and the default short-circuit fraction.
///
/// # Safety
/// `lib` must be a live handle and `out_cond` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lp_conditions_reference(lib: *const LpLibrary, out_cond: *mut LpConditions) -> LpStatus {
    guard(|| {
        let op = *deref(lib, "lib")?.inner.ref_point();
        *out(out_cond, "out_cond")? = LpConditions {
            vdd: op.vdd,
            frequency_hz: op.frequency,
            temperature_k: op.temperature_k,
            corner: LpCorner::Tt,
            vth0: f64::NAN,
            leakage_source: LpLeakageSource::Model,
            k_sc: cellpower::analysis::DEFAULT_K_SC,
        };
        Ok(())
    })
}

/// Parses and validates netlist text against `lib`.
///
/// # Safety
/// `lib` must be a live handle, `netlist_text` NUL-terminated, `out_netlist` valid.
#[no_mangle]
pub unsafe extern "C" fn lp_netlist_parse(
    lib: *const LpLibrary,
    netlist_text: *const c_char,
    out_netlist: *mut *mut LpNetlist,
) -> LpStatus {
    guard(|| {
        let slot = out(out_netlist, "out_netlist")?;
        *slot = ptr::null_mut();
        let lib = deref(lib, "lib")?;
        let nl = parse_netlist(text(netlist_text, "netlist_text")?, &lib.inner).map_err(|diags| {
            let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
            Failure(LpStatus::Diagnostics, lines.join("\n"))
        })?;
        *slot = Box::into_raw(Box::new(LpNetlist { inner: nl }));
        Ok(())
    })
}

/// # Safety
/// `nl` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lp_netlist_free(nl: *mut LpNetlist) {
    if !nl.is_null() {
        drop(Box::from_raw(nl));
    }
}

/// Number of gate instances, or 0 for a null handle.
///
/// # Safety
/// `nl` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lp_netlist_instance_count(nl: *const LpNetlist) -> usize {
    nl.as_ref().map_or(0, |n| n.inner.instances.len())
}

/// Power, critical delay and area at the given conditions. `activity_text`
/// holds `prob <net> <p>` lines and may be null; unlisted primary inputs
/// default to probability 0.5.
///
/// # Safety
/// Handles must be live; `activity_text` null or NUL-terminated; other
/// pointers valid.
#[no_mangle]
pub unsafe extern "C" fn lp_estimate(
    lib: *const LpLibrary,
    nl: *const LpNetlist,
    cond: *const LpConditions,
    activity_text: *const c_char,
    out_estimate: *mut LpEstimate,
) -> LpStatus {
    guard(|| {
        let lib = &deref(lib, "lib")?.inner;
        let nl = &deref(nl, "netlist")?.inner;
        let c = deref(cond, "cond")?;
        let slot = out(out_estimate, "out_estimate")?;
        let given = if activity_text.is_null() {
            BTreeMap::new()
        } else {
            parse_activity(text(activity_text, "activity_text")?).map_err(|diags| {
                let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
                Failure(LpStatus::Diagnostics, lines.join("\n"))
            })?
        };
        if let Some(net) = given.keys().find(|n| !nl.primary_inputs.contains(n)) {
            return Err(Failure(LpStatus::Diagnostics, format!("{net} is not a primary input")));
        }
        let p = cellpower::activity::with_default_probabilities(nl, &given);
        let activity = propagate_probabilities(nl, lib, &p)?;
        let analyzer = Analyzer::new(nl, lib, conditions(lib, c))?;
        let power = analyzer.power(&activity, c.k_sc)?;
        let variants = analyzer.declared_variants();
        *slot = LpEstimate {
            p_switching_w: power.total.p_switching_w,
            p_short_circuit_w: power.total.p_short_circuit_w,
            p_leakage_w: power.total.p_leakage_w,
            p_total_w: power.total.p_total_w,
            critical_delay_ns: analyzer.critical_delay_with(&variants),
            area_um2: analyzer.area_um2_with(&variants),
        };
        Ok(())
    })
}

/// Greedy leakage minimization under a delay budget. When
/// `out_assignment` is non-null it receives `assign <id> <variant>` lines,
/// to be freed with [`lp_string_free`].
///
/// # Safety
/// Handles must be live; `out_assignment` null or valid; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn lp_optimize(
    lib: *const LpLibrary,
    nl: *const LpNetlist,
    cond: *const LpConditions,
    delay_budget_ns: f64,
    out_result: *mut LpOptimizeResult,
    out_assignment: *mut *mut c_char,
) -> LpStatus {
    guard(|| {
        let lib = &deref(lib, "lib")?.inner;
        let nl = &deref(nl, "netlist")?.inner;
        let c = deref(cond, "cond")?;
        let slot = out(out_result, "out_result")?;
        let r = optimize_leakage(nl, lib, &conditions(lib, c), delay_budget_ns)?;
        *slot = LpOptimizeResult {
            leakage_w: r.leakage_w,
            critical_delay_ns: r.critical_delay_ns,
            moves_accepted: r.moves_accepted as u32,
            feasible: r.feasible,
        };
        if let Some(a) = out_assignment.as_mut() {
            *a = to_c_string(format_assignment(nl, &r.assignment));
        }
        Ok(())
    })
}
