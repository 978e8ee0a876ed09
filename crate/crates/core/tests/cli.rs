use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/scenarios")
        .join(name)
}

fn echomote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_echomote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_shipped_scenario() {
    let path = data("dual_mote_414_313hz.cfg");
    let o = echomote(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("ok (2 motes, 58 us pulses"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "schema_version = 9\nseed = 1\n").unwrap();
    let o = echomote(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema_version"));
    let missing = dir.path().join("absent.cfg");
    let o = echomote(&["run", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let path = data("single_mote_313hz.cfg");
    let out = blocker.join("sub");
    let o = echomote(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn run_writes_summary_and_honours_seed() {
    let path = data("single_mote_313hz.cfg");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = echomote(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("seed = 99"));
    assert_eq!(stdout(&o), summary);
    for f in [
        "metrics.csv",
        "mote0_pulses.csv",
        "mote0_stream.csv",
        "mote0_psd.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn empty_sweep_prints_header() {
    let path = data("single_mote_313hz.cfg");
    let o = echomote(&[
        "sweep",
        "--scenario",
        path.to_str().unwrap(),
        "--axis",
        "depth",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    let o = echomote(&[
        "sweep",
        "--scenario",
        path.to_str().unwrap(),
        "--axis",
        "tilt",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_and_codebook() {
    let path = data("dual_mote_414_313hz.cfg");
    let o = echomote(&[
        "budget",
        "--scenario",
        path.to_str().unwrap(),
        "--bits",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).is_empty());
    let o = echomote(&["codebook", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("worst cross-correlation 0.000e0"), "{text}");
}

#[test]
fn negative_grid_start_is_a_value() {
    let path = data("dual_mote_414_313hz.cfg");
    let o = echomote(&[
        "sweep",
        "--scenario",
        path.to_str().unwrap(),
        "--axis",
        "mote_dz",
        "--grid",
        "-1 mm:0 mm:1 mm",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // header plus two points for each of two motes
    assert_eq!(stdout(&o).lines().count(), 5);
}
