use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cellpower::{builtin_reference_library, load_library, Strictness};

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn ex(name: &str) -> String {
    examples().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellpower")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn estimate_not_reports_table_leakage() {
    let out = run(&["estimate", &ex("not.net")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["power"]["p_leakage_w"].as_f64(), Some(3.98e-9));
    assert_eq!(v["timing"]["critical_delay_ns"].as_f64(), Some(30.327));
    assert_eq!(v["area_um2"].as_f64(), Some(1.32));
}

#[test]
fn golden_outputs() {
    let out = run(&["estimate", &ex("not.net")]);
    assert_eq!(stdout(&out), include_str!("golden/not_estimate.json"));
    let out = run(&["corners", &ex("fulladder.net"), "--activity", &ex("activity_half.act"), "--format", "csv"]);
    assert_eq!(stdout(&out), include_str!("golden/fulladder_corners.csv"));
}

#[test]
fn sweep_grid_has_49_rows() {
    let out = run(&[
        "sweep",
        &ex("fulladder.net"),
        "--vdd-range",
        "0.6:1.2:0.1",
        "--vth-range",
        "0.2:0.5:0.05",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 9);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 7 * 7);
    assert_eq!(&rows[0][0], "0.6");
    assert_eq!(&rows[48][1], "0.5");
}

#[test]
fn emit_library_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lib.json");
    let out = run(&["emit-library", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let (lib, _) = load_library(&text, Strictness::Strict).unwrap();
    assert_eq!(lib, builtin_reference_library());
    // and the emitted file is accepted as --library
    let out = run(&["--library", path.to_str().unwrap(), "estimate", &ex("not.net")]);
    assert_eq!(stdout(&out), include_str!("golden/not_estimate.json"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.net");
    std::fs::write(&bad, "input a\noutput y\ngate g1 NOT a -> y\ngate g2 NOT a -> y\n").unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("multiple drivers"), "{err}");

    assert_eq!(run(&["estimate", &ex("missing.net")]).status.code(), Some(1));
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", &ex("not.net"), "--vdd-range", "1.2:0.6:0.1", "--vth-range", "0.3:0.3:0.1"]).status.code(), Some(2));
    assert_eq!(run(&["optimize", &ex("not.net"), "--delay-budget-ns", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", &ex("not.net"), "--corner", "XX"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["check", &ex("ripple2.net")]).status.code(), Some(0));
}

#[test]
fn check_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cellpower"))
        .current_dir(dir.path())
        .args(["check", &ex("fulladder.net"), "--activity", &ex("activity_half.act")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["estimate", &ex("ripple2.net"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&run(&["estimate", &ex("ripple2.net")])));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for net in ["not.net", "nand.net", "mux1.net", "fulladder.net", "ripple2.net"] {
        for cmd in [
            vec!["estimate"],
            vec!["corners"],
            vec!["optimize", "--delay-budget-ns", "200"],
            vec!["sweep", "--vdd-range", "0.8:1.2:0.2", "--vth-range", "0.3:0.4:0.05", "--format", "csv"],
        ] {
            let mut args: Vec<String> = vec![cmd[0].into(), ex(net)];
            args.extend(cmd[1..].iter().map(|s| s.to_string()));
            if net == "fulladder.net" {
                args.extend(["--activity".to_string(), ex("activity_half.act")]);
            }
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let a = run(&args);
            let b = run(&args);
            assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
            assert_eq!(a.stdout, b.stdout);
        }
    }
}
