//! Named, fully deterministic experiments with pass/fail checks and tabular output.

mod corpus;
mod output;
mod runs;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use corpus::{corpus, line_corpus, recipes, CorpusEntry};
pub use output::{OutputFormat, Table};
pub use runs::*;

use crate::check::{all_passed, Check};
use crate::corona::Params;
use crate::error::Result;
use crate::measure::Recipe;
use crate::reduce::Reduction;

/// What an experiment computes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// p_∞ = c²/4 on random triangles whose doubled area is at least `min_flatness` times the longest side squared.
    CurvatureIdentity { samples: usize, min_flatness: f64 },
    /// p₀ ≤ 2·p_∞ on random triangles.
    ComparisonInequality { samples: usize },
    /// Minimum of p_t over the unit disc for each t.
    SignDichotomy { nonnegative: Vec<f64>, negative: Vec<f64>, samples: usize },
    ZeroLines { ts: Vec<f64> },
    /// p_t(μ) and c²(μ) on measures supported on lines.
    Collinearity {
        measures: Vec<Recipe>,
        #[serde(with = "crate::check::lenient::seq")]
        ts: Vec<f64>,
    },
    /// ‖T_{k_∞,ε}1‖² against p_{∞,ε}/3 along refinement families.
    MvIdentity { families: Vec<Vec<Recipe>>, eps: Vec<f64> },
    /// Fast paths against the naive loops.
    OracleEquivalence {
        measures: Vec<Recipe>,
        #[serde(with = "crate::check::lenient::seq")]
        ts: Vec<f64>,
        eps: f64,
    },
    CoronaStructure { measures: Vec<Recipe> },
    /// F for the root tree at the given parameters, plus a companion run with a larger α.
    LipschitzGraph { measure: Recipe, companion_alpha: Option<f64> },
    PackingSandwich { measures: Vec<Recipe>, refinement: Vec<Recipe> },
    BetaPacking { measures: Vec<Recipe> },
    CantorGrowth { max_level: u32 },
    BiLipschitz { measures: Vec<Recipe>, constants: Vec<f64> },
    Theorem1Corpus { measures: Vec<Recipe> },
    T0Bracket { measures: Vec<Recipe> },
    C1Estimate { thetas: Vec<f64>, samples: usize },
}

/// Seed used when a spec or command does not name one.
pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub reduction: Reduction,
    /// Directory for the report and tables.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentSpec {
    pub fn new(name: &str, experiment: Experiment) -> Self {
        Self {
            name: name.to_string(),
            experiment,
            seed: DEFAULT_SEED,
            params: Params::default(),
            reduction: Reduction::default(),
            output: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// The computed part of a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub records: BTreeMap<String, serde_json::Value>,
    /// Reported constants and ratios; never asserted.
    #[serde(with = "crate::check::lenient::map")]
    pub observed: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn record<T: Serialize>(&mut self, key: impl Into<String>, value: &T) {
        self.records.insert(key.into(), serde_json::to_value(value).expect("record serializes"));
    }

    pub fn observe(&mut self, key: impl Into<String>, value: f64) {
        self.observed.insert(key.into(), value);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn merge(&mut self, prefix: &str, other: Outcome) {
        for (k, v) in other.records {
            self.records.insert(format!("{prefix}{k}"), v);
        }
        for (k, v) in other.observed {
            self.observed.insert(format!("{prefix}{k}"), v);
        }
        self.checks.extend(other.checks);
        self.tables.extend(other.tables);
    }

    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    /// The spec that produced the report; absent for single commands.
    pub spec: Option<ExperimentSpec>,
    pub records: BTreeMap<String, serde_json::Value>,
    #[serde(with = "crate::check::lenient::map")]
    pub observed: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Wall-clock seconds.
    pub timings: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn from_outcome(name: &str, spec: Option<ExperimentSpec>, outcome: Outcome, seconds: f64) -> Self {
        let passed = outcome.passed();
        Self {
            name: name.to_string(),
            spec,
            records: outcome.records,
            observed: outcome.observed,
            checks: outcome.checks,
            passed,
            timings: BTreeMap::from([("total".to_string(), seconds)]),
            tables: outcome.tables,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON report with wall-times removed, for reproducibility comparisons.
    pub fn to_json_without_timings(&self) -> String {
        let mut copy = self.clone();
        copy.timings.clear();
        copy.to_json()
    }

    /// Whether every check's verdict agrees with its stored numbers and `passed` with the checks.
    pub fn consistent(&self) -> bool {
        self.checks.iter().all(Check::consistent) && self.passed == all_passed(&self.checks)
    }

    pub fn seconds(&self) -> f64 {
        self.timings.get("total").copied().unwrap_or(0.0)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Runs one experiment.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.params.validate()?;
    let start = Instant::now();
    let seed = spec.seed;
    let red = spec.reduction;
    let p = &spec.params;
    let outcome = match &spec.experiment {
        Experiment::CurvatureIdentity { samples, min_flatness } => curvature_identity(*samples, *min_flatness, seed)?,
        Experiment::ComparisonInequality { samples } => comparison_inequality(*samples, seed)?,
        Experiment::SignDichotomy { nonnegative, negative, samples } => sign_dichotomy(nonnegative, negative, *samples, seed)?,
        Experiment::ZeroLines { ts } => zero_line_counts(ts),
        Experiment::Collinearity { measures, ts } => collinearity(measures, ts, seed, red)?,
        Experiment::MvIdentity { families, eps } => mv_identity(families, eps, seed, red)?,
        Experiment::OracleEquivalence { measures, ts, eps } => oracle_equivalence(measures, ts, *eps, seed, red)?,
        Experiment::CoronaStructure { measures } => corona_structure(measures, p, seed)?,
        Experiment::LipschitzGraph { measure, companion_alpha } => lipschitz_graph(measure, p, *companion_alpha, seed)?,
        Experiment::PackingSandwich { measures, refinement } => packing_sandwich(measures, refinement, p, seed, red)?,
        Experiment::BetaPacking { measures } => beta_packing(measures, p, seed, red)?,
        Experiment::CantorGrowth { max_level } => cantor_growth(*max_level, red)?,
        Experiment::BiLipschitz { measures, constants } => bilipschitz_experiment(measures, constants, seed, red)?,
        Experiment::Theorem1Corpus { measures } => theorem1_corpus(measures, seed, red)?,
        Experiment::T0Bracket { measures } => t0_bracket(measures, seed, red)?,
        Experiment::C1Estimate { thetas, samples } => c1_estimates(thetas, *samples, seed)?,
    };
    Ok(Report::from_outcome(&spec.name, Some(spec.clone()), outcome, start.elapsed().as_secs_f64()))
}

/// Sweep used for zero lines and collinearity.
pub const T_SWEEP: [f64; 10] = [-3.0, -2.0, -1.5, -1.0, -0.75, -0.5, -0.25, 0.0, 0.5, 1.0];

/// The specs behind the thirteen acceptance rows, in order.
pub fn acceptance_specs() -> Vec<ExperimentSpec> {
    let small = recipes(&corpus(24, 2));
    let mid = recipes(&corpus(64, 3));
    let lines = recipes(&line_corpus(64));
    vec![
        ExperimentSpec::new("ac01-curvature-identity", Experiment::CurvatureIdentity { samples: 100_000, min_flatness: 1e-2 }),
        ExperimentSpec::new("ac02-comparison-inequality", Experiment::ComparisonInequality { samples: 100_000 }),
        ExperimentSpec::new(
            "ac03-sign-dichotomy",
            Experiment::SignDichotomy {
                nonnegative: vec![-3.0, -2.0, 0.0, 0.5, 1.0, 5.0],
                negative: vec![-1.0, -0.75, -0.5],
                samples: 20_000,
            },
        ),
        ExperimentSpec::new("ac04-zero-lines", Experiment::ZeroLines { ts: T_SWEEP.to_vec() }),
        ExperimentSpec::new("ac05-collinearity", Experiment::Collinearity { measures: lines, ts: T_SWEEP.to_vec() }),
        ExperimentSpec::new(
            "ac06-mv-identity",
            Experiment::MvIdentity {
                families: vec![
                    [100, 200, 400].map(|n| Recipe::Segment { n }).to_vec(),
                    [100, 200, 400].map(|n| Recipe::LipschitzGraph { n, slope: 0.2 }).to_vec(),
                ],
                eps: vec![0.02, 0.05, 0.1],
            },
        ),
        ExperimentSpec::new(
            "ac07-oracle-equivalence",
            Experiment::OracleEquivalence { measures: small, ts: vec![f64::INFINITY, 0.0, -0.5, 1.0], eps: 0.1 },
        ),
        ExperimentSpec::new("ac08-corona-structure", Experiment::CoronaStructure { measures: recipes(&corpus(64, 4)) }),
        ExperimentSpec::new(
            "ac09-lipschitz-graph",
            Experiment::LipschitzGraph { measure: Recipe::LipschitzGraph { n: 128, slope: 0.2 }, companion_alpha: Some(1e8) },
        ),
        ExperimentSpec::new(
            "ac10-packing-sandwich",
            Experiment::PackingSandwich {
                measures: mid.clone(),
                refinement: [100, 200, 400].map(|n| Recipe::LipschitzGraph { n, slope: 0.2 }).to_vec(),
            },
        ),
        ExperimentSpec::new("ac11-beta-packing", Experiment::BetaPacking { measures: mid }),
        ExperimentSpec::new("ac12-cantor-growth", Experiment::CantorGrowth { max_level: 4 }),
        ExperimentSpec::new(
            "ac13-bilipschitz",
            Experiment::BiLipschitz {
                measures: vec![Recipe::LipschitzGraph { n: 64, slope: 0.2 }, Recipe::Cantor4 { level: 2 }, Recipe::Cantor4 { level: 3 }],
                constants: vec![1.1, 1.2, 1.5],
            },
        ),
    ]
}

/// Every shipped spec: the acceptance rows plus the corpus tables.
pub fn builtin_specs() -> Vec<ExperimentSpec> {
    let mut out = acceptance_specs();
    let six = vec![
        Recipe::Segment { n: 128 },
        Recipe::LipschitzGraph { n: 128, slope: 0.2 },
        Recipe::Circle { n: 128, radius: 0.5 },
        Recipe::Cantor4 { level: 3 },
        Recipe::Line { n: 128, angle: std::f64::consts::FRAC_PI_2, length: 1.0 },
        Recipe::Perturbed { base: Box::new(Recipe::LipschitzGraph { n: 128, slope: 0.2 }), amplitude: 1e-3 },
    ];
    out.push(ExperimentSpec::new("theorem1-corpus", Experiment::Theorem1Corpus { measures: six }));
    out.push(ExperimentSpec::new("t0-bracket", Experiment::T0Bracket { measures: recipes(&corpus(64, 3)) }));
    out.push(ExperimentSpec::new("c1-estimate", Experiment::C1Estimate { thetas: vec![0.05, 0.1, 0.2, 0.5, 1.0], samples: 50_000 }));
    out
}

pub fn builtin(name: &str) -> Option<ExperimentSpec> {
    builtin_specs().into_iter().find(|s| s.name == name || s.name.starts_with(&format!("{name}-")))
}
