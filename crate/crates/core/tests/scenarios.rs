use std::path::{Path, PathBuf};

use echomote::scenario::{
    load_scenario, parse_grid, run, sweep, write_artifacts, write_sweep_csv, SweepAxis,
};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/scenarios")
        .join(name)
}

const SHIPPED: [&str; 3] = [
    "single_mote_313hz.cfg",
    "dual_mote_414_313hz.cfg",
    "neural_trace_45mm.cfg",
];

#[test]
fn shipped_scenarios_validate() {
    for name in SHIPPED {
        let s = load_scenario(&data(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        s.validate().unwrap();
        let d = s.resolved_pulse_duration().unwrap();
        assert!(d < 2.0 * s.medium.time_of_flight(50e-3), "{name}: {d}");
    }
}

#[test]
fn neural_trace_is_tracked() {
    let a = run(&load_scenario(&data("neural_trace_45mm.cfg")).unwrap()).unwrap();
    let m = &a.motes[0];
    assert_eq!(m.dropped, 0);
    assert!(
        m.input_correlation.unwrap() > 0.98,
        "{:?}",
        m.input_correlation
    );
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let s = load_scenario(&data("dual_mote_414_313hz.cfg")).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_artifacts(&run(&s).unwrap(), d.path()).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "summary.txt"));
    assert!(names.iter().any(|n| n == "a_stream.csv"), "{names:?}");
    for n in &names {
        let a = std::fs::read(dirs[0].path().join(n)).unwrap();
        let b = std::fs::read(dirs[1].path().join(n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn seed_changes_noise_only() {
    let mut s = load_scenario(&data("single_mote_313hz.cfg")).unwrap();
    s.n_pulses = 1024;
    let a = run(&s).unwrap();
    s.seed += 1;
    let b = run(&s).unwrap();
    assert_ne!(a.motes[0].stream.samples, b.motes[0].stream.samples);
    assert_eq!(a.motes[0].calibration, b.motes[0].calibration);
    let (ta, tb) = (
        a.motes[0].tone.as_ref().unwrap(),
        b.motes[0].tone.as_ref().unwrap(),
    );
    assert!((ta.amplitude / tb.amplitude - 1.0).abs() < 0.01);
}

#[test]
fn depth_sweep_reports_every_point() {
    let mut s = load_scenario(&data("single_mote_313hz.cfg")).unwrap();
    s.n_pulses = 1024;
    let grid = parse_grid("48 mm:56 mm:4 mm", SweepAxis::Depth.dim()).unwrap();
    let rows = sweep(&s, SweepAxis::Depth, &grid, Some(2)).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.status == "ok"), "{rows:?}");
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    // a sweep is the same whatever the pool size
    let serial = sweep(&s, SweepAxis::Depth, &grid, Some(1)).unwrap();
    assert_eq!(serial, rows);
}
