use menger::experiments::{builtin, run, Experiment, ExperimentSpec, OutputFormat, Report};
use menger::{Recipe, Reduction};

fn small_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        "small-collinearity",
        Experiment::Collinearity { measures: vec![Recipe::Segment { n: 20 }], ts: vec![f64::INFINITY, 0.0, -0.5] },
    );
    spec.reduction = Reduction::Sequential;
    spec
}

#[test]
fn identical_specs_give_identical_reports() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for spec in [small_spec(), builtin("ac04").unwrap(), builtin("ac12").unwrap()] {
        let a = pool.install(|| run(&spec)).unwrap();
        let b = pool.install(|| run(&spec)).unwrap();
        assert_eq!(a.to_json_without_timings(), b.to_json_without_timings(), "{}", spec.name);
        assert!(a.passed && a.consistent());
    }
}

#[test]
fn report_json_round_trips() {
    let report = run(&builtin("ac04").unwrap()).unwrap();
    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());
    assert!(report.to_json_without_timings().contains("\"timings\": {}"));
}

#[test]
fn non_finite_values_survive_json() {
    let mut outcome = menger::experiments::Outcome::default();
    outcome.observe("unbounded", f64::INFINITY);
    outcome.check(menger::check::Check::le("bounded", f64::NAN, 1.0));
    let report = Report::from_outcome("x", None, outcome, 0.0);
    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.observed["unbounded"], f64::INFINITY);
    assert!(back.checks[0].observed.is_nan());
    assert!(!back.passed);
}

#[test]
fn writes_json_and_csv() {
    let dir = std::env::temp_dir().join(format!("menger-report-{}", std::process::id()));
    let report = run(&builtin("ac12").unwrap()).unwrap();
    let json = report.write(&dir, OutputFormat::Json).unwrap();
    assert_eq!(json.len(), 1);
    assert!(json[0].ends_with("ac12-cantor-growth.json"));
    let csv = report.write(&dir, OutputFormat::Csv).unwrap();
    assert!(csv.iter().any(|p| p.to_string_lossy().ends_with("-checks.csv")));
    for p in &csv {
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with('#') || text.starts_with("name"), "{}", p.display());
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failing_checks_fail_the_report() {
    let spec = ExperimentSpec::new("zero-lines-off", Experiment::ZeroLines { ts: vec![-0.5] });
    let report = run(&spec).unwrap();
    assert!(report.passed);
    let bad = ExperimentSpec::new(
        "bad",
        Experiment::Collinearity { measures: vec![Recipe::Circle { n: 10, radius: 1.0 }], ts: vec![1.0] },
    );
    assert!(!run(&bad).unwrap().passed);
}
