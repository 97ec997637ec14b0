use std::fs;
use std::path::PathBuf;

use tasmaj::experiment::{floor_report, run_sweep, sweep_rows, FLOOR_HEADER, SWEEP_HEADER};
use tasmaj::{load_spec, OutputKind, Scheme, SpecError};

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn shipped() -> Vec<PathBuf> {
    let mut out: Vec<_> = fs::read_dir(specs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "spec"))
        .collect();
    out.sort();
    out
}

#[test]
fn every_shipped_spec_loads_and_validates() {
    let all = shipped();
    assert!(all.len() >= 19, "found {} specs", all.len());
    for path in all {
        let spec = load_spec(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(spec.problems().is_empty(), "{}", path.display());
        let name = path.file_stem().unwrap().to_str().unwrap();
        assert_eq!(spec.output.as_deref().and_then(|p| p.to_str()), Some(format!("{name}.csv").as_str()));
    }
}

#[test]
fn three_user_setup() {
    let spec = load_spec(&specs_dir().join("fig2.spec")).unwrap();
    assert_eq!(spec.system.powers, vec![0.6, 0.3, 0.1]);
    assert_eq!(spec.system.thresholds, vec![1.4, 2.2, 2.5]);
    assert_eq!((spec.system.n_t, spec.system.n_r), (2, 1));
    assert_eq!(spec.schemes, vec![Scheme::Majority, Scheme::A3, Scheme::Aia]);
    assert_eq!(spec.snr_db.points().len(), 9);
    let imp = spec.impairments().unwrap();
    assert!(imp.rho() < 1.0 && imp.rho() > 0.99);
}

#[test]
fn five_user_specs_are_simulation_only() {
    for name in ["fig4_5_ideal.spec", "fig4_5_impaired.spec"] {
        let spec = load_spec(&specs_dir().join(name)).unwrap();
        assert_eq!(spec.system.num_users(), 5);
        assert_eq!(spec.outputs, vec![OutputKind::Mc]);
    }
}

#[test]
fn analytic_sweep_of_shipped_spec() {
    let spec = load_spec(&specs_dir().join("fig8.spec")).unwrap();
    let rows = sweep_rows(&spec).unwrap();
    let grid = spec.snr_db.points();
    assert_eq!(rows.len(), grid.len() * 3 * 4);
    for user in 1..=3 {
        let of = |kind: &str| -> Vec<f64> {
            rows.iter().filter(|r| r.user == user && r.kind == kind).map(|r| r.value).collect()
        };
        let (exact, upper, floor) = (of("exact"), of("upper"), of("floor"));
        let floor_upper = of("floor_upper");
        assert!(floor.windows(2).all(|w| w[0] == w[1]));
        assert!(floor_upper[0] > floor[0]);
        for i in 0..grid.len() {
            assert!(exact[i] >= floor[i] * (1.0 - 1e-9), "user {user} at {} dB", grid[i]);
            // the leading-term bound only holds once the outage is small
            if exact[i] < 1e-2 {
                assert!(upper[i] >= exact[i] * (1.0 - 1e-9), "user {user} at {} dB", grid[i]);
            }
        }
        assert!(exact.windows(2).all(|w| w[1] <= w[0]));
        // at 60 dB the curve has settled onto its floor
        assert!((exact[grid.len() - 1] / floor[0] - 1.0).abs() < 0.05);
    }
    let csv = run_sweep(&spec).unwrap();
    assert_eq!(csv.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn floor_report_of_shipped_spec() {
    let spec = load_spec(&specs_dir().join("fig8.spec")).unwrap();
    let csv = floor_report(&spec).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], FLOOR_HEADER);
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let fields: Vec<_> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[1], "35");
        assert_eq!(fields[4], "false");
    }
}

#[test]
fn load_reports_missing_file_and_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.spec");
    assert!(matches!(load_spec(&missing), Err(SpecError::Io { .. })));

    let bad = dir.path().join("bad.spec");
    fs::write(&bad, r#"{"m": 1, "n_t": 2, "n_r": 1, "bogus": 3}"#).unwrap();
    match load_spec(&bad) {
        Err(SpecError::Invalid(problems)) => {
            assert!(problems.iter().any(|p| p.contains("bogus")));
            assert!(problems.iter().any(|p| p.contains("powers")));
        }
        other => panic!("expected invalid spec, got {other:?}"),
    }
}
