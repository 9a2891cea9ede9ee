use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use menger::check::{all_passed, Check};
use menger::corona::{build_top, build_tree, Params};
use menger::experiments::{self, builtin, builtin_specs, ExperimentSpec, DEFAULT_SEED, Outcome, OutputFormat, Report, Table};
use menger::graphfit::build_lipschitz_f;
use menger::lattice::Lattice;
use menger::measure::{generate, Recipe};
use menger::permutations::{curvature_measure, perm_self, sign_scan};
use menger::sio::{l2_norm_sq_t1, mv_identity_report, theorem1_ratios, TruncationGrid};
use menger::{Ball, KernelParam, Measure, Point, Reduction};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "menger", version, about = "Permutations, curvature and corona decompositions of planar measures")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Measure file (JSON) or recipe such as `graph:n=128,slope=0.2`.
    #[arg(long, global = true)]
    measure: Option<String>,
    /// Parameter overrides: inline JSON or a path to a JSON file.
    #[arg(long, global = true)]
    params: Option<String>,
    /// Random seed for generators and samplers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-reproducible output.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a measure and write it as JSON.
    Gen,
    /// Triple integral p_t(μ).
    Perm {
        /// Kernel parameter; `inf` for k_∞.
        #[arg(long, default_value = "inf")]
        t: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Curvature c²(μ), checked against 4·p_∞(μ).
    Curv {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// ‖T_{k,ε}1‖² on a truncation grid and the two norm ratios.
    Sio {
        #[arg(long, default_value = "inf")]
        t: String,
        /// Comma-separated truncations; defaults to a geometric grid.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// ‖T_{k,ε}1‖² against p_{k,ε}/3.
    MvCheck {
        #[arg(long, default_value = "inf")]
        t: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05])]
        eps: Vec<f64>,
    },
    /// Build the lattice and dump it.
    Lattice,
    /// Build the corona and dump it.
    Corona {
        /// Cap on the number of generations.
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Build F for the root tree: graph CSV and interval table.
    GraphFit {
        #[arg(long, default_value_t = 2048)]
        samples: usize,
    },
    /// Compare the fast sums with the naive loops.
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1])]
        eps: Vec<f64>,
    },
    /// Minimum of p_t over the unit disc; asserts non-negativity for t outside (−2, 0).
    ScanSign {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-3.0, -2.0, -1.0, -0.75, -0.5, 0.0, 0.5, 1.0, 5.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
    },
    /// Empirical upper bounds on c₁(θ).
    C1Estimate {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.5, 1.0])]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 50000)]
        samples: usize,
    },
    /// max p_∞/(p₀ + C*²μ) over the corpus, or over `--measure` alone.
    T0Bracket,
    /// c²(φ#μ)/(c²(μ) + μ(ℂ)) for shears, warps and spirals.
    Bilip {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.1, 1.2, 1.5])]
        constants: Vec<f64>,
    },
    /// p_∞ of the four-corner Cantor measures.
    CantorGrowth {
        #[arg(long, default_value_t = 4)]
        max_level: u32,
    },
    /// Run named or file-based experiment specs.
    Report {
        /// Spec names or JSON files; all shipped specs when empty.
        specs: Vec<String>,
        /// List the shipped specs and exit.
        #[arg(long)]
        list: bool,
    },
}

impl Common {
    fn params(&self) -> Result<Params> {
        let Some(raw) = &self.params else { return Ok(Params::default()) };
        let text = if Path::new(raw).is_file() { fs::read_to_string(raw)? } else { raw.clone() };
        let p: Params = serde_json::from_str(&text).context("parsing --params")?;
        p.validate()?;
        Ok(p)
    }

    fn recipe(&self) -> Result<Option<Recipe>> {
        match &self.measure {
            Some(raw) if !Path::new(raw).exists() => Ok(Some(raw.parse()?)),
            _ => Ok(None),
        }
    }

    fn measure(&self) -> Result<Measure> {
        let Some(raw) = &self.measure else { bail!("--measure is required") };
        if Path::new(raw).exists() {
            return Measure::load(raw).with_context(|| format!("loading {raw}"));
        }
        let recipe: Recipe = raw.parse().with_context(|| format!("parsing recipe {raw}"))?;
        Ok(generate(&recipe, self.seed())?)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn reduction(&self) -> Reduction {
        Reduction::default()
    }

    fn emit_text(&self, file: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(file), text)?;
            }
            None => println!("{text}"),
        }
        Ok(())
    }

    fn emit_json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        self.emit_text(file, &serde_json::to_string_pretty(value)?)
    }
}

fn kernel(t: &str) -> Result<KernelParam<f64>> {
    match t {
        "inf" | "infinity" => Ok(KernelParam::Infinity),
        other => Ok(KernelParam::Finite(other.parse().with_context(|| format!("parsing t = {other}"))?)),
    }
}

/// Prints the checks to stderr and returns whether they all hold.
fn finish(checks: &[Check]) -> bool {
    for c in checks {
        eprintln!("{c}");
    }
    all_passed(checks)
}

fn emit_outcome(common: &Common, name: &str, outcome: Outcome, seconds: f64) -> Result<bool> {
    let mut outcome = outcome;
    outcome.record("seed", &common.seed());
    outcome.record("params", &common.params()?);
    let report = Report::from_outcome(name, None, outcome, seconds);
    emit_report(common, &report)?;
    Ok(finish(&report.checks))
}

fn emit_report(common: &Common, report: &Report) -> Result<()> {
    match &common.out {
        Some(dir) => {
            report.write(dir, common.format)?;
        }
        None => match common.format {
            OutputFormat::Json => println!("{}", report.to_json()),
            OutputFormat::Csv => {
                print!("{}", report.checks_csv());
                for t in &report.tables {
                    print!("\n\n{}", t.to_csv());
                }
            }
        },
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    let red = c.reduction();
    let start = std::time::Instant::now();
    match &cli.command {
        Command::Gen => {
            let m = c.measure()?;
            let json = m.to_json();
            let back = Measure::from_json(&json)?;
            c.emit_text("measure.json", &json)?;
            Ok(finish(&[Check::holds("round_trip_bit_exact", back == m)]))
        }
        Command::Perm { t, eps } => {
            let m = c.measure()?;
            let r = perm_self(kernel(t)?, &m, *eps, red);
            c.emit_json("perm.json", &r)?;
            Ok(finish(&[Check::holds("finite", r.value.is_finite())]))
        }
        Command::Curv { eps } => {
            let m = c.measure()?;
            let c2 = curvature_measure(&m, *eps, red);
            let p = perm_self(KernelParam::Infinity, &m, *eps, red);
            c.emit_json("curvature.json", &c2)?;
            Ok(finish(&[
                Check::ge("nonnegative", c2.value, 0.0),
                Check::le("identity_gap", experiments::relative_gap(c2.value, 4.0 * p.value), 1e-10),
            ]))
        }
        Command::Sio { t, eps } => {
            let m = c.measure()?;
            let grid = if eps.is_empty() { TruncationGrid::default_for(&m)? } else { TruncationGrid::new(eps.clone())? };
            grid.validate_for(&m)?;
            let k = kernel(t)?;
            let mut out = Outcome::default();
            let mut table = Table::new("norms", &["eps", "l2_norm_sq"]);
            for &e in grid.epsilons() {
                let v = l2_norm_sq_t1(k, &m, e, red);
                out.check(Check::holds(format!("eps={e}.finite"), v.is_finite()));
                table.push(vec![e, v]);
            }
            out.tables.push(table);
            out.record("ratios", &theorem1_ratios(&m, &grid, red)?);
            emit_outcome(c, "sio", out, start.elapsed().as_secs_f64())
        }
        Command::MvCheck { t, eps } => {
            let m = c.measure()?;
            let mut out = Outcome::default();
            for &e in eps {
                let r = mv_identity_report(kernel(t)?, &m, e, red)?;
                out.check(Check::holds(format!("eps={e}.finite"), r.normalized_remainder.is_finite()));
                out.observe(format!("eps={e}.normalized_remainder"), r.normalized_remainder);
                out.record(format!("eps={e}"), &r);
            }
            emit_outcome(c, "mv-check", out, start.elapsed().as_secs_f64())
        }
        Command::Lattice => {
            let m = c.measure()?;
            let lattice = Lattice::build(&m, c.params()?.lattice_config())?;
            c.emit_json("lattice.json", &lattice.dump())?;
            let rep = &lattice.report;
            Ok(finish(&[
                Check::eq("containment_violations", rep.containment_violations.len() as f64, 0.0),
                Check::holds("radius_sandwich", rep.radius_sandwich_holds),
                Check::holds("root_doubling", lattice.cube(lattice.root()).doubling),
            ]))
        }
        Command::Corona { generations } => {
            let m = c.measure()?;
            let params = c.params()?;
            let lattice = Lattice::build(&m, params.lattice_config())?;
            let corona = build_top(&lattice, &params, *generations)?;
            let dump = corona.dump(&lattice, red)?;
            c.emit_json("corona.json", &dump)?;
            Ok(finish(&dump.checks))
        }
        Command::GraphFit { samples } => {
            let m = c.measure()?;
            let params = c.params()?;
            let lattice = Lattice::build(&m, params.lattice_config())?;
            let tree = build_tree(&lattice, &params, lattice.root())?;
            let graph = build_lipschitz_f(&lattice, &tree, &params)?;
            let mut table = Table::new("graph", &["u", "f"]);
            for (u, f) in graph.curve(*samples) {
                table.push(vec![u, f]);
            }
            c.emit_text("graph.csv", &table.to_csv())?;
            c.emit_json("intervals.json", &graph.cover)?;
            Ok(finish(&graph.checks(&lattice, &tree)?))
        }
        Command::Verify { eps } => {
            let m = c.measure()?;
            let ts = [f64::INFINITY, -1.0, -0.5, 0.0, 1.0];
            let out = experiments::verify_measure(&m, &ts, eps, red)?;
            emit_outcome(c, "verify", out, start.elapsed().as_secs_f64())
        }
        Command::ScanSign { t, samples } => {
            let mut out = Outcome::default();
            let mut table = Table::new("sign-scan", &["t", "min_value"]);
            for &tv in t {
                let r = sign_scan(tv, Ball::new(Point::origin(), 1.0), *samples, c.seed())?;
                if tv <= -2.0 || tv >= 0.0 {
                    out.check(Check::ge(format!("t={tv}.min_nonnegative"), r.min_value, -1e-10));
                }
                out.observe(format!("t={tv}.min_value"), r.min_value);
                out.record(format!("t={tv}"), &r);
                table.push(vec![tv, r.min_value]);
            }
            out.tables.push(table);
            emit_outcome(c, "scan-sign", out, start.elapsed().as_secs_f64())
        }
        Command::C1Estimate { theta, samples } => {
            let out = experiments::c1_estimates(theta, *samples, c.seed())?;
            emit_outcome(c, "c1-estimate", out, start.elapsed().as_secs_f64())
        }
        Command::T0Bracket => {
            let recipes = match c.recipe()? {
                Some(r) => vec![r],
                None if c.measure.is_some() => bail!("t0-bracket takes a recipe, not a file"),
                None => experiments::recipes(&experiments::corpus(64, 3)),
            };
            let out = experiments::t0_bracket(&recipes, c.seed(), red)?;
            emit_outcome(c, "t0-bracket", out, start.elapsed().as_secs_f64())
        }
        Command::Bilip { constants } => {
            let recipes = match c.recipe()? {
                Some(r) => vec![r],
                None if c.measure.is_some() => bail!("bilip takes a recipe, not a file"),
                None => vec![Recipe::LipschitzGraph { n: 64, slope: 0.2 }, Recipe::Cantor4 { level: 2 }],
            };
            let out = experiments::bilipschitz_experiment(&recipes, constants, c.seed(), red)?;
            emit_outcome(c, "bilip", out, start.elapsed().as_secs_f64())
        }
        Command::CantorGrowth { max_level } => {
            if *max_level > 5 {
                bail!("cantor-growth supports levels up to 5");
            }
            let out = experiments::cantor_growth(*max_level, red)?;
            emit_outcome(c, "cantor-growth", out, start.elapsed().as_secs_f64())
        }
        Command::Report { specs, list } => {
            if *list {
                for s in builtin_specs() {
                    println!("{}", s.name);
                }
                return Ok(true);
            }
            let specs: Vec<ExperimentSpec> = if specs.is_empty() {
                builtin_specs()
            } else {
                specs
                    .iter()
                    .map(|s| {
                        if Path::new(s).is_file() {
                            Ok(ExperimentSpec::from_json(&fs::read_to_string(s)?)?)
                        } else {
                            builtin(s).with_context(|| format!("no spec named {s}"))
                        }
                    })
                    .collect::<Result<_>>()?
            };
            let mut ok = true;
            for mut spec in specs {
                if let Some(seed) = c.seed {
                    spec.seed = seed;
                }
                if c.params.is_some() {
                    spec.params = c.params()?;
                }
                let report = experiments::run(&spec)?;
                let line = format!("{} {} ({:.2}s)", if report.passed { "PASS" } else { "FAIL" }, spec.name, report.seconds());
                emit_report(c, &report)?;
                for f in report.failures() {
                    eprintln!("  {f}");
                }
                eprintln!("{line}");
                ok &= report.passed;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
