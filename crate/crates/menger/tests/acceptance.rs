//! One line per acceptance criterion: status, name, wall time, budget and the first failures.

use std::process::ExitCode;
use std::time::Duration;

use menger::experiments::{acceptance_specs, run};

const BUDGETS: [Duration; 13] = [
    Duration::from_secs(1),
    Duration::from_secs(1),
    Duration::from_secs(30),
    Duration::from_secs(1),
    Duration::from_secs(5),
    Duration::from_secs(120),
    Duration::from_secs(10),
    Duration::from_secs(300),
    Duration::from_secs(60),
    Duration::from_secs(600),
    Duration::from_secs(300),
    Duration::from_secs(600),
    Duration::from_secs(300),
];

fn main() -> ExitCode {
    let specs = acceptance_specs();
    assert_eq!(specs.len(), BUDGETS.len());
    let mut failed = 0;
    for (spec, budget) in specs.iter().zip(BUDGETS) {
        let (ok, detail) = match run(spec) {
            Ok(report) => {
                let secs = report.seconds();
                let in_time = secs <= budget.as_secs_f64();
                let mut detail = format!("{} checks, {:.2}s of {}s", report.checks.len(), secs, budget.as_secs());
                if !in_time {
                    detail.push_str(", over budget");
                }
                for c in report.failures().into_iter().take(5) {
                    detail.push_str(&format!("; {c}"));
                }
                (report.passed && report.consistent() && in_time, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {} ({detail})", if ok { "PASS" } else { "FAIL" }, spec.name);
    }
    println!("acceptance: {} passed, {failed} failed", BUDGETS.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
