use std::ffi::{CStr, CString};
use std::ptr;

use cellpower_ffi::*;

const NOT_NET: &str = "input a\noutput y\ngate g1 NOT a -> y\n";
const FA_NET: &str = include_str!("../../core/examples/fulladder.net");

fn last_error() -> String {
    unsafe { CStr::from_ptr(lp_last_error_message()) }.to_str().unwrap().to_owned()
}

struct Fixture {
    lib: *mut LpLibrary,
    nl: *mut LpNetlist,
    cond: LpConditions,
}

impl Fixture {
    fn new(netlist: &str) -> Fixture {
        unsafe {
            let mut lib = ptr::null_mut();
            assert_eq!(lp_library_builtin(&mut lib), LpStatus::Ok);
            let text = CString::new(netlist).unwrap();
            let mut nl = ptr::null_mut();
            assert_eq!(lp_netlist_parse(lib, text.as_ptr(), &mut nl), LpStatus::Ok, "{}", last_error());
            let mut cond = std::mem::zeroed();
            assert_eq!(lp_conditions_reference(lib, &mut cond), LpStatus::Ok);
            Fixture { lib, nl, cond }
        }
    }

    fn estimate(&self, cond: &LpConditions, activity: Option<&str>) -> (LpStatus, LpEstimate) {
        let act = activity.map(|a| CString::new(a).unwrap());
        let mut est = LpEstimate::default();
        let status = unsafe {
            lp_estimate(self.lib, self.nl, cond, act.as_ref().map_or(ptr::null(), |a| a.as_ptr()), &mut est)
        };
        (status, est)
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            lp_netlist_free(self.nl);
            lp_library_free(self.lib);
        }
    }
}

#[test]
fn estimate_matches_table_values() {
    let f = Fixture::new(NOT_NET);
    assert_eq!(unsafe { lp_netlist_instance_count(f.nl) }, 1);
    assert_eq!(f.cond.vdd, 1.2);
    assert!(f.cond.vth0.is_nan());
    let (status, est) = f.estimate(&f.cond, None);
    assert_eq!(status, LpStatus::Ok);
    assert_eq!(est.p_leakage_w, 3.98e-9);
    assert_eq!(est.critical_delay_ns, 30.327);
    assert_eq!(est.area_um2, 1.32);
    assert_eq!(est.p_switching_w, 0.0);
    assert_eq!(last_error(), "");
}

#[test]
fn estimate_agrees_with_rust_api() {
    let f = Fixture::new(FA_NET);
    let mut cond = f.cond;
    cond.vdd = 0.9;
    cond.corner = LpCorner::Ss;
    cond.leakage_source = LpLeakageSource::Table;
    let (status, est) = f.estimate(&cond, Some("prob a 0.3\nprob b 0.6\n"));
    assert_eq!(status, LpStatus::Ok, "{}", last_error());

    use cellpower::library::CornerName;
    let lib = cellpower::builtin_reference_library();
    let nl = cellpower::parse_netlist(FA_NET, &lib).unwrap();
    let mut c = cellpower::Conditions::reference(&lib);
    c.op.vdd = 0.9;
    c.corner = lib.corner(CornerName::SS);
    c.leakage_source = cellpower::LeakageSource::Table;
    let p = [("a", 0.3), ("b", 0.6), ("cin", 0.5)].map(|(k, v)| (k.to_string(), v)).into();
    let act = cellpower::propagate_probabilities(&nl, &lib, &p).unwrap();
    let power = cellpower::total_power(&nl, &lib, &act, &c, 0.1).unwrap();
    let timing = cellpower::static_timing(&nl, &lib, &c).unwrap();
    assert_eq!(est.p_total_w, power.total.p_total_w);
    assert_eq!(est.p_leakage_w, power.total.p_leakage_w);
    assert_eq!(est.critical_delay_ns, timing.critical_delay_ns);
}

#[test]
fn errors_set_status_and_message() {
    let f = Fixture::new(NOT_NET);
    unsafe {
        let mut nl = ptr::null_mut();
        let bad = CString::new("input a\noutput y\ngate g1 NOPE a -> y\n").unwrap();
        assert_eq!(lp_netlist_parse(f.lib, bad.as_ptr(), &mut nl), LpStatus::Diagnostics);
        assert!(nl.is_null());
        assert!(last_error().contains("unknown cell"), "{}", last_error());

        assert_eq!(lp_netlist_parse(f.lib, ptr::null(), &mut nl), LpStatus::NullArgument);
        assert_eq!(lp_estimate(ptr::null(), f.nl, &f.cond, ptr::null(), &mut LpEstimate::default()), LpStatus::NullArgument);

        let invalid = [0x66u8, 0xff, 0];
        assert_eq!(lp_netlist_parse(f.lib, invalid.as_ptr().cast(), &mut nl), LpStatus::InvalidUtf8);

        let mut lib = ptr::null_mut();
        let json = CString::new("{\"cells\": 3}").unwrap();
        assert_eq!(lp_library_from_json(json.as_ptr(), false, &mut lib), LpStatus::LibraryError);
        assert!(lib.is_null());
    }
    let mut cond = f.cond;
    cond.vdd = -1.0;
    assert_eq!(f.estimate(&cond, None).0, LpStatus::DomainError);
    assert!(!last_error().is_empty());
    assert_eq!(f.estimate(&f.cond, Some("prob zz 0.5\n")).0, LpStatus::Diagnostics);
    assert_eq!(f.estimate(&f.cond, Some("prob a 1.5\n")).0, LpStatus::Diagnostics);
    // a success clears the message
    assert_eq!(f.estimate(&f.cond, None).0, LpStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn library_json_round_trip() {
    unsafe {
        let mut lib = ptr::null_mut();
        assert_eq!(lp_library_builtin(&mut lib), LpStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(lp_library_to_json(lib, &mut json), LpStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert_eq!(text, include_str!("../../core/examples/reference_library.json"));
        let mut back = ptr::null_mut();
        assert_eq!(lp_library_from_json(json, false, &mut back), LpStatus::Ok);
        lp_string_free(json);
        let mut json2 = ptr::null_mut();
        assert_eq!(lp_library_to_json(back, &mut json2), LpStatus::Ok);
        assert_eq!(CStr::from_ptr(json2).to_str().unwrap(), text);
        lp_string_free(json2);
        lp_library_free(back);
        lp_library_free(lib);
        // null is accepted by every release function
        lp_library_free(ptr::null_mut());
        lp_netlist_free(ptr::null_mut());
        lp_string_free(ptr::null_mut());
        assert_eq!(lp_netlist_instance_count(ptr::null()), 0);
    }
}

#[test]
fn optimize_returns_assignment_text() {
    let f = Fixture::new("input a\noutput y\ngate g1 NOT a -> m\ngate g2 NOT m -> y\n");
    unsafe {
        let mut r = LpOptimizeResult::default();
        let mut text = ptr::null_mut();
        assert_eq!(lp_optimize(f.lib, f.nl, &f.cond, 1e6, &mut r, &mut text), LpStatus::Ok);
        assert!(r.feasible);
        assert_eq!(r.moves_accepted, 2);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "assign g1 stacked\nassign g2 stacked\n");
        lp_string_free(text);

        assert_eq!(lp_optimize(f.lib, f.nl, &f.cond, 1.0, &mut r, ptr::null_mut()), LpStatus::Ok);
        assert!(!r.feasible);
        assert_eq!(lp_optimize(f.lib, f.nl, &f.cond, -1.0, &mut r, ptr::null_mut()), LpStatus::DomainError);
    }
}

#[test]
fn errors_are_per_thread() {
    let f = Fixture::new(NOT_NET);
    let mut cond = f.cond;
    cond.vdd = -1.0;
    assert_eq!(f.estimate(&cond, None).0, LpStatus::DomainError);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/cellpower.h");
    for name in [
        "lp_last_error_message",
        "lp_string_free",
        "lp_library_builtin",
        "lp_library_from_json",
        "lp_library_to_json",
        "lp_library_free",
        "lp_conditions_reference",
        "lp_netlist_parse",
        "lp_netlist_free",
        "lp_netlist_instance_count",
        "lp_estimate",
        "lp_optimize",
        "typedef struct LpLibrary LpLibrary;",
        "typedef struct LpNetlist LpNetlist;",
        "LP_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
