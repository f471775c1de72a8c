//! Replays the checked-in fuzz seeds through the loaders on stable.

use std::path::PathBuf;

use swipt_cli::{ScenarioFile, SweepSpec};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn sdpa_seeds_round_trip() {
    for (path, text) in seeds("sdpa_parse") {
        let p = conic::sdpa::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let out = conic::sdpa::export(&p).unwrap();
        assert_eq!(conic::sdpa::export(&conic::sdpa::parse(&out).unwrap()).unwrap(), out);
    }
}

#[test]
fn config_seeds_load() {
    for (path, text) in seeds("config_json") {
        let f = ScenarioFile::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        f.system().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        f.geometry().unwrap();
    }
}

#[test]
fn sweep_seeds_load() {
    for (path, text) in seeds("sweep_spec") {
        let s = SweepSpec::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if s.base.is_some() {
            for &v in &s.values {
                s.config_at(v).unwrap();
            }
        }
    }
}

#[test]
fn hostile_inputs_are_rejected_cleanly() {
    assert!(ScenarioFile::parse(r#"{"version": 1, "antennas": 18446744073709551615}"#).unwrap().system().is_err());
    assert!(SweepSpec::parse(r#"{"version": 1, "parameter": "M", "values": [1e300], "realizations": 1,
        "methods": ["1"], "base": {"version": 1}, "seed": 0}"#)
    .unwrap()
    .config_at(1e300)
    .is_err());
    assert!(conic::sdpa::parse("1\n1\n-99999999999\n1\n").is_err());
    assert!(conic::sdpa::parse("").is_err());
}
