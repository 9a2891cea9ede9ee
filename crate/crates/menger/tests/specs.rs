use std::fs;
use std::path::PathBuf;

use menger::experiments::{acceptance_specs, builtin, builtin_specs, ExperimentSpec};

fn spec_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

#[test]
fn shipped_files_match_builtins() {
    let dir = spec_dir();
    if std::env::var_os("MENGER_WRITE_SPECS").is_some() {
        fs::create_dir_all(&dir).unwrap();
        for spec in builtin_specs() {
            fs::write(dir.join(format!("{}.json", spec.name)), spec.to_json() + "\n").unwrap();
        }
    }
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    let mut expected: Vec<String> = builtin_specs().iter().map(|s| format!("{}.json", s.name)).collect();
    expected.sort();
    assert_eq!(names, expected);
    for spec in builtin_specs() {
        let text = fs::read_to_string(dir.join(format!("{}.json", spec.name))).unwrap();
        let parsed = ExperimentSpec::from_json(&text).unwrap();
        assert_eq!(parsed, spec, "{} differs from its builtin", spec.name);
    }
}

#[test]
fn each_acceptance_row_has_one_spec() {
    let specs = acceptance_specs();
    assert_eq!(specs.len(), 13);
    for (i, spec) in specs.iter().enumerate() {
        let prefix = format!("ac{:02}-", i + 1);
        assert!(spec.name.starts_with(&prefix), "{}", spec.name);
        assert_eq!(specs.iter().filter(|s| s.name.starts_with(&prefix)).count(), 1);
    }
}

#[test]
fn spec_json_round_trips() {
    for spec in builtin_specs() {
        let back = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}

#[test]
fn lookup_by_prefix() {
    assert_eq!(builtin("ac04").unwrap().name, "ac04-zero-lines");
    assert_eq!(builtin("c1-estimate").unwrap().name, "c1-estimate");
    assert!(builtin("ac99").is_none());
}

#[test]
fn missing_fields_take_defaults() {
    let spec = ExperimentSpec::from_json(r#"{"name":"z","experiment":{"kind":"zero_lines","ts":[0.5]}}"#).unwrap();
    assert_eq!(spec.seed, menger::experiments::DEFAULT_SEED);
    assert!(spec.output.is_none());
}
