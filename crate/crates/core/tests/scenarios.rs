use std::path::Path;

use dichotomy_core::scenario::commands::{cmd_certify, cmd_report, cmd_solve, cmd_verify};
use dichotomy_core::scenario::presets::{preset, PRESETS};
use dichotomy_core::scenario::report::ExitStatus;
use dichotomy_core::scenario::Scenario;

fn scenario_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

#[test]
fn shipped_files_match_presets() {
    for name in PRESETS {
        let path = scenario_dir().join(format!("{name}.toml"));
        let from_file = Scenario::load(&path).unwrap();
        let built = preset(name).unwrap();
        assert_eq!(from_file.fingerprint(), built.fingerprint(), "{name}");
    }
}

#[test]
fn toml_round_trip_keeps_fingerprint() {
    for name in PRESETS {
        let s = preset(name).unwrap();
        let back = Scenario::from_toml_str(&s.to_toml(), name).unwrap();
        assert_eq!(back.fingerprint(), s.fingerprint(), "{name}");
    }
}

fn run_all(name: &str, dir: &Path) -> Vec<String> {
    let mut s = preset(name).unwrap();
    s.output = Some(dir.to_path_buf());
    let r = s.resolve().unwrap();
    let mut out = Vec::new();
    for report in [
        cmd_certify(&r).unwrap().report,
        cmd_solve(&r).unwrap().report,
        cmd_verify(&r, None).unwrap().report,
    ] {
        assert_eq!(
            report.status,
            ExitStatus::Success,
            "{name} {}",
            report.command
        );
        let mut v = serde_json::to_value(&report).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("timings");
        obj["config"].as_object_mut().unwrap().remove("output");
        out.push(v.to_string());
        out.push(report.content_hash.clone());
    }
    out
}

#[test]
fn reruns_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(
        run_all("exponential", a.path()),
        run_all("exponential", b.path())
    );
    let manifold = |d: &Path| std::fs::read(d.join("manifold.json")).unwrap();
    assert_eq!(manifold(a.path()), manifold(b.path()));
}

#[test]
fn every_preset_verifies() {
    let root = tempfile::tempdir().unwrap();
    for name in PRESETS {
        run_all(name, &root.path().join(name));
    }
    let summary = cmd_report(root.path()).unwrap();
    assert_eq!(summary.status, ExitStatus::Success);
    assert_eq!(summary.rows.len(), 3 * PRESETS.len());
}
