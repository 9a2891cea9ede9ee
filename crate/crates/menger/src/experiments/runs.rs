use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Outcome, Table};
use crate::check::Check;
use crate::corona::{beta_packing_sum, build_top, build_tree, packing_sum, stop_mass_report, Params};
use crate::error::Result;
use crate::graphfit::{build_lipschitz_f, graph_closeness_report};
use crate::kernels::{zero_lines, KernelParam};
use crate::lattice::Lattice;
use crate::measure::{generate, Ball, DiscreteMeasure, PlaneMap, Point2, Recipe};
use crate::naive;
use crate::permutations::{
    curvature_measure, estimate_c1, is_degenerate, menger_curvature, perm_pointwise, perm_self, sign_scan,
};
use crate::reduce::Reduction;
use crate::sio::{l2_norm_sq_t1, mv_identity_report, theorem1_ratios, TruncationGrid};

type Measure = DiscreteMeasure<f64>;

/// Relative gap `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `max(a, b)/min(a, b)` for positive values; 1 when both are zero, ∞ when only one is.
pub fn drift(a: f64, b: f64) -> f64 {
    let (a, b) = (a.abs(), b.abs());
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a.max(b) / a.min(b)
    }
}

fn kernel_of(t: f64) -> KernelParam<f64> {
    if t.is_infinite() {
        KernelParam::Infinity
    } else {
        KernelParam::Finite(t)
    }
}

fn naive_t(t: f64) -> Option<f64> {
    (!t.is_infinite()).then_some(t)
}

fn t_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t}")
    }
}

fn measures(recipes: &[Recipe], seed: u64) -> Result<Vec<(String, Measure)>> {
    recipes.iter().map(|r| Ok((r.to_string(), generate(r, seed)?))).collect()
}

fn disk_point(rng: &mut ChaCha8Rng) -> Point2<f64> {
    loop {
        let p = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if p.norm_sqr() <= 1.0 {
            return p;
        }
    }
}

/// Random triangles in the unit disc with doubled area at least `min_flatness` times the squared longest side.
pub fn random_triangles(samples: usize, min_flatness: f64, seed: u64) -> Vec<[Point2<f64>; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let z = [disk_point(&mut rng), disk_point(&mut rng), disk_point(&mut rng)];
        let area2 = (z[1] - z[0]).cross(z[2] - z[0]).abs();
        let longest = (z[0] - z[1]).norm_sqr().max((z[0] - z[2]).norm_sqr()).max((z[1] - z[2]).norm_sqr());
        if is_degenerate(z[0], z[1], z[2]) || area2 < min_flatness * longest {
            continue;
        }
        out.push(z);
    }
    out
}

fn max_f64(values: impl ParallelIterator<Item = f64>) -> f64 {
    values.reduce(|| 0.0, f64::max)
}

pub fn curvature_identity(samples: usize, min_flatness: f64, seed: u64) -> Result<Outcome> {
    let triangles = random_triangles(samples, min_flatness, seed);
    let worst = max_f64(triangles.par_iter().map(|z| {
        let p = perm_pointwise(KernelParam::Infinity, z[0], z[1], z[2]).expect("distinct points");
        let c = naive::curvature(z[0], z[1], z[2]);
        relative_gap(p, c * c / 4.0)
    }));
    let (o, e1, i) = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
    let p_anchor = perm_pointwise(KernelParam::Infinity, o, e1, i)?;
    let c_anchor = menger_curvature(o, e1, i)?;
    let mut out = Outcome::default();
    out.observe("max_relative_error", worst);
    out.observe("anchor_p_inf", p_anchor);
    out.observe("anchor_curvature", c_anchor);
    out.check(Check::le("identity.max_relative_error", worst, 1e-10));
    out.check(Check::le("anchor.p_inf_minus_half", (p_anchor - 0.5).abs(), 1e-15));
    out.check(Check::le("anchor.curvature_minus_sqrt2", (c_anchor - std::f64::consts::SQRT_2).abs(), 1e-15));
    out.record("samples", &triangles.len());
    Ok(out)
}

pub fn comparison_inequality(samples: usize, seed: u64) -> Result<Outcome> {
    let triangles = random_triangles(samples, 0.0, seed);
    let ratios: Vec<(f64, f64)> = triangles
        .par_iter()
        .map(|z| {
            let p0 = perm_pointwise(KernelParam::Finite(0.0), z[0], z[1], z[2]).expect("distinct points");
            let pinf = perm_pointwise(KernelParam::Infinity, z[0], z[1], z[2]).expect("distinct points");
            ((p0 - 2.0 * pinf) / (2.0 * pinf), p0 / pinf)
        })
        .collect();
    let excess = ratios.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.observe("max_relative_excess", excess);
    out.observe("max_p0_over_pinf", max_ratio);
    out.check(Check::le("p0_le_2pinf.relative_excess", excess, 1e-12));
    out.record("samples", &triangles.len());
    Ok(out)
}

pub fn sign_dichotomy(nonnegative: &[f64], negative: &[f64], samples: usize, seed: u64) -> Result<Outcome> {
    let all: Vec<(f64, bool)> = nonnegative.iter().map(|&t| (t, true)).chain(negative.iter().map(|&t| (t, false))).collect();
    let scans = all
        .par_iter()
        .map(|&(t, _)| sign_scan(t, Ball::new(Point2::origin(), 1.0), samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut table = Table::new("sign-scan", &["t", "min_value"]);
    for (&(t, nonneg), scan) in all.iter().zip(&scans) {
        let label = t_label(t);
        if nonneg {
            out.check(Check::ge(format!("t={label}.min_nonnegative"), scan.min_value, -1e-10));
        } else {
            out.check(Check::lt(format!("t={label}.negative_witness"), scan.min_value, 0.0));
        }
        out.observe(format!("t={label}.min_value"), scan.min_value);
        out.record(format!("t={label}"), scan);
        table.push(vec![t, scan.min_value]);
    }
    out.tables.push(table);
    Ok(out)
}

/// Number of lines through the origin on which k_t vanishes: one for t < −1 or t ≥ 0,
/// two at t = −1 and three for −1 < t < 0.
pub fn expected_zero_lines(t: f64) -> usize {
    if t == -1.0 {
        2
    } else if t > -1.0 && t < 0.0 {
        3
    } else {
        1
    }
}

pub fn zero_line_counts(ts: &[f64]) -> Outcome {
    let mut out = Outcome::default();
    let mut table = Table::new("zero-lines", &["t", "count", "expected"]);
    for &t in ts {
        let angles = zero_lines(t);
        let expected = expected_zero_lines(t);
        let residual = angles.iter().map(|&a| naive::kernel(Some(t), a.cos(), a.sin()).abs()).fold(0.0, f64::max);
        out.check(Check::eq(format!("t={t}.count"), angles.len() as f64, expected as f64));
        out.check(Check::le(format!("t={t}.kernel_on_lines"), residual, 1e-12));
        out.record(format!("t={t}"), &angles);
        table.push(vec![t, angles.len() as f64, expected as f64]);
    }
    out.tables.push(table);
    out
}

pub fn collinearity(recipes: &[Recipe], ts: &[f64], seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut kernels: Vec<f64> = ts.to_vec();
    kernels.push(f64::INFINITY);
    for (name, m) in measures(recipes, seed)? {
        let tol = 1e-14 * m.scale();
        let mut values = BTreeMap::new();
        for &t in &kernels {
            let v = perm_self(kernel_of(t), &m, 0.0, red).value;
            values.insert(format!("p_t={}", t_label(t)), v);
        }
        let c2 = curvature_measure(&m, 0.0, red).value;
        values.insert("c2".to_string(), c2);
        let worst = values.values().map(|v| v.abs()).fold(0.0, f64::max);
        out.check(Check::le(format!("{name}.max_abs"), worst, tol));
        out.record(&name, &values);
    }
    Ok(out)
}

#[derive(Serialize)]
struct MvRow {
    n: usize,
    eps: f64,
    lhs: f64,
    p_third: f64,
    normalized_remainder: f64,
}

pub fn mv_identity(families: &[Vec<Recipe>], eps: &[f64], seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new("mv-identity", &["family", "n", "eps", "normalized_remainder"]);
    for (f, family) in families.iter().enumerate() {
        let ms = measures(family, seed)?;
        let mut grid: Vec<Vec<f64>> = Vec::new();
        for (name, m) in &ms {
            let mut row = Vec::new();
            for &e in eps {
                let rep = mv_identity_report(KernelParam::Infinity, m, e, red)?;
                out.check(Check::holds(format!("{name}.eps={e}.finite"), rep.normalized_remainder.is_finite()));
                out.record(
                    format!("{name}.eps={e}"),
                    &MvRow { n: m.len(), eps: e, lhs: rep.lhs, p_third: rep.p_third, normalized_remainder: rep.normalized_remainder },
                );
                if matches!(family[0], Recipe::Segment { .. }) && m.len() == 200 && e == 0.05 {
                    out.check(Check::le(format!("{name}.eps={e}.abs_remainder"), rep.normalized_remainder.abs(), 10.0));
                }
                table.push(vec![f as f64, m.len() as f64, e, rep.normalized_remainder]);
                row.push(rep.normalized_remainder);
            }
            grid.push(row);
        }
        table.next_block();
        for (k, pair) in grid.windows(2).enumerate() {
            for (j, &e) in eps.iter().enumerate() {
                let d = drift(pair[0][j], pair[1][j]);
                out.check(Check::le(format!("{}->{}.eps={e}.drift", ms[k].0, ms[k + 1].0), d, 2.0));
            }
        }
    }
    out.tables.push(table);
    Ok(out)
}

pub fn oracle_equivalence(recipes: &[Recipe], ts: &[f64], eps: f64, seed: u64, red: Reduction) -> Result<Outcome> {
    let red = match red {
        Reduction::Sequential => Reduction::Chunked { chunk: 4 },
        chunked => chunked,
    };
    let small: Vec<Recipe> = recipes.iter().filter(|r| r.atom_count() <= 30).cloned().collect();
    let mut out = Outcome::default();
    let mut worst: f64 = 0.0;
    for (name, m) in measures(&small, seed)? {
        let mut gaps = BTreeMap::new();
        let l2_eps = eps.max(m.scale());
        for &t in ts {
            let k = kernel_of(t);
            let label = t_label(t);
            for e in [0.0, eps] {
                let fast = perm_self(k, &m, e, red).value;
                let slow = naive::perm_measure(naive_t(t), &m, e);
                gaps.insert(format!("perm.t={label}.eps={e}"), relative_gap(fast, slow));
            }
            let fast = l2_norm_sq_t1(k, &m, l2_eps, red);
            let slow = naive::l2_norm_sq_t1(naive_t(t), &m, l2_eps);
            gaps.insert(format!("l2.t={label}.eps={l2_eps}"), relative_gap(fast, slow));
        }
        let fast = curvature_measure(&m, 0.0, red).value;
        gaps.insert("curvature".to_string(), relative_gap(fast, naive::curvature_measure(&m, 0.0)));
        let fast = m.linear_growth_constant()?;
        gaps.insert("growth".to_string(), relative_gap(fast, naive::growth_constant(&m)));
        let local = gaps.values().copied().fold(0.0, f64::max);
        worst = worst.max(local);
        out.check(Check::le(format!("{name}.max_relative_gap"), local, 1e-10));
        out.record(&name, &gaps);
    }
    out.observe("max_relative_gap", worst);
    out.record("measures", &small.iter().map(|r| r.to_string()).collect::<Vec<_>>());
    Ok(out)
}

fn prefixed(prefix: &str, checks: Vec<Check>) -> Vec<Check> {
    checks
        .into_iter()
        .map(|mut c| {
            c.name = format!("{prefix}.{}", c.name);
            c
        })
        .collect()
}

#[derive(Serialize)]
struct CoronaSummary {
    atoms: usize,
    cubes: usize,
    generations: usize,
    top: usize,
    labels: BTreeMap<String, usize>,
    root_stop: usize,
}

pub fn corona_structure(recipes: &[Recipe], params: &Params, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    for (recipe, (name, m)) in recipes.iter().zip(measures(recipes, seed)?) {
        let lattice = Lattice::build(&m, params.lattice_config())?;
        let corona = build_top(&lattice, params, None)?;
        out.checks.extend(prefixed(&name, corona.checks(&lattice)));
        let mut labels = BTreeMap::new();
        for v in corona.trees.iter().flat_map(|t| &t.verdicts) {
            *labels.entry(v.label.as_str().to_string()).or_insert(0) += 1;
        }
        let root_tree = &corona.trees[0];
        if matches!(recipe, Recipe::Segment { .. }) {
            let graph = build_lipschitz_f(&lattice, root_tree, params)?;
            let max_f = graph.sample_points().into_iter().map(|u| graph.eval(u).abs()).fold(0.0, f64::max);
            out.check(Check::eq(format!("{name}.root_stop_count"), root_tree.stop.len() as f64, 0.0));
            out.check(Check::eq(format!("{name}.max_abs_f"), max_f, 0.0));
        }
        out.record(
            &name,
            &CoronaSummary {
                atoms: m.len(),
                cubes: lattice.cubes.len(),
                generations: corona.generations.len(),
                top: corona.top().len(),
                labels,
                root_stop: root_tree.stop.len(),
            },
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct GraphSummary {
    alpha: f64,
    root_label: String,
    identically_zero: bool,
    intervals: usize,
    whitney_intervals: usize,
    lipschitz_estimate: f64,
    lipschitz_reference: f64,
    support_extent: f64,
    diam_r: f64,
    projection_collisions: usize,
    max_closeness_ratio_near: f64,
}

fn one_graph(lattice: &Lattice, params: &Params, prefix: &str, out: &mut Outcome) -> Result<()> {
    let tree = build_tree(lattice, params, lattice.root())?;
    let graph = build_lipschitz_f(lattice, &tree, params)?;
    let closeness = graph_closeness_report(lattice, &graph, &tree)?;
    let stop = stop_mass_report(lattice, &tree, params);
    let mut checks = graph.checks(lattice, &tree)?;
    checks.push(Check::le("lipschitz_estimate", graph.lipschitz_estimate, 1.0));
    checks.extend(tree.checks(lattice, params));
    out.checks.extend(prefixed(prefix, checks));
    let root_label = tree.verdict(tree.root).map(|v| v.label.as_str()).unwrap_or("NONE").to_string();
    out.observe(format!("{prefix}.lipschitz_estimate"), graph.lipschitz_estimate);
    out.observe(format!("{prefix}.bump_derivative_constant"), graph.bump_derivative_constant());
    out.observe(format!("{prefix}.max_closeness_ratio_near"), closeness.max_ratio_near);
    out.record(
        format!("{prefix}.summary"),
        &GraphSummary {
            alpha: params.alpha,
            root_label,
            identically_zero: graph.identically_zero,
            intervals: graph.cover.intervals.len(),
            whitney_intervals: graph.cover.whitney().count(),
            lipschitz_estimate: graph.lipschitz_estimate,
            lipschitz_reference: graph.lipschitz_reference,
            support_extent: graph.support_extent,
            diam_r: graph.diam_r,
            projection_collisions: graph.graph_map.collisions.len(),
            max_closeness_ratio_near: closeness.max_ratio_near,
        },
    );
    out.record(format!("{prefix}.stop_mass"), &stop);
    let mut table = Table::new(&format!("{prefix}-graph"), &["u", "f"]);
    for (u, f) in graph.curve(1024) {
        table.push(vec![u, f]);
    }
    out.tables.push(table);
    Ok(())
}

pub fn lipschitz_graph(recipe: &Recipe, params: &Params, companion_alpha: Option<f64>, seed: u64) -> Result<Outcome> {
    let m = generate(recipe, seed)?;
    let lattice = Lattice::build(&m, params.lattice_config())?;
    let mut out = Outcome::default();
    one_graph(&lattice, params, "default", &mut out)?;
    if let Some(alpha) = companion_alpha {
        let companion = Params { alpha, ..*params };
        companion.validate()?;
        one_graph(&lattice, &companion, "companion", &mut out)?;
    }
    out.record("measure", &recipe.to_string());
    Ok(out)
}

pub fn packing_sandwich(recipes: &[Recipe], refinement: &[Recipe], params: &Params, seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new("packing", &["atoms", "c_left", "c_right"]);
    let mut run_one = |name: &str, m: &Measure, out: &mut Outcome| -> Result<(f64, f64)> {
        let lattice = Lattice::build(m, params.lattice_config())?;
        let corona = build_top(&lattice, params, None)?;
        let rec = packing_sum(&corona, &lattice, red)?;
        out.check(Check::holds(format!("{name}.c_left_finite"), rec.c_left.is_finite()));
        out.check(Check::holds(format!("{name}.c_right_finite"), rec.c_right.is_finite()));
        out.check(Check::le(format!("{name}.left_inequality"), rec.p_inf, rec.c_left * rec.sum * (1.0 + 1e-12)));
        out.check(Check::le(
            format!("{name}.right_inequality"),
            rec.sum,
            rec.c_right * (rec.p0 + rec.growth_term) * (1.0 + 1e-12),
        ));
        out.observe(format!("{name}.c_left"), rec.c_left);
        out.observe(format!("{name}.c_right"), rec.c_right);
        out.record(name, &rec);
        table.push(vec![m.len() as f64, rec.c_left, rec.c_right]);
        Ok((rec.c_left, rec.c_right))
    };
    for (name, m) in measures(recipes, seed)? {
        run_one(&name, &m, &mut out)?;
    }
    let mut constants = Vec::new();
    for (name, m) in measures(refinement, seed)? {
        constants.push((name.clone(), run_one(&format!("refinement.{name}"), &m, &mut out)?));
    }
    for w in constants.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        out.check(Check::le(format!("{}->{}.c_left_drift", a.0, b.0), drift(a.1 .0, b.1 .0), 2.0));
        out.check(Check::le(format!("{}->{}.c_right_drift", a.0, b.0), drift(a.1 .1, b.1 .1), 2.0));
    }
    out.tables.push(table);
    Ok(out)
}

pub fn beta_packing(recipes: &[Recipe], params: &Params, seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut worst: f64 = 0.0;
    for (recipe, (name, m)) in recipes.iter().zip(measures(recipes, seed)?) {
        let lattice = Lattice::build(&m, params.lattice_config())?;
        let rec = beta_packing_sum(&lattice, red);
        out.check(Check::holds(format!("{name}.ratio_finite"), rec.ratio.is_finite()));
        if recipe.is_collinear() {
            out.check(Check::eq(format!("{name}.lhs_zero"), rec.lhs, 0.0));
        }
        worst = worst.max(rec.ratio);
        out.observe(format!("{name}.ratio"), rec.ratio);
        out.record(&name, &rec);
    }
    out.observe("max_ratio", worst);
    Ok(out)
}

#[derive(Serialize)]
struct CantorRow {
    level: u32,
    atoms: usize,
    p_inf: f64,
    naive: f64,
    control: f64,
}

pub fn cantor_growth(max_level: u32, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new("cantor-growth", &["level", "p_inf"]);
    let mut previous: Option<f64> = None;
    for level in 1..=max_level {
        let m = generate(&Recipe::Cantor4 { level }, 0)?;
        let p = perm_self(KernelParam::Infinity, &m, 0.0, red).value;
        let slow = naive::perm_measure(None, &m, 0.0);
        let control_m = generate(&Recipe::Segment { n: m.len() }, 0)?;
        let control = perm_self(KernelParam::Infinity, &control_m, 0.0, red).value;
        out.check(Check::le(format!("level={level}.oracle_gap"), relative_gap(p, slow), 1e-10));
        out.check(Check::eq(format!("level={level}.collinear_control"), control, 0.0));
        match previous {
            None => out.check(Check::gt(format!("level={level}.positive"), p, 0.0)),
            Some(prev) => out.check(Check::gt(format!("level={level}.increasing"), p, prev)),
        }
        previous = Some(p);
        out.record(format!("level={level}"), &CantorRow { level, atoms: m.len(), p_inf: p, naive: slow, control });
        table.push(vec![level as f64, p]);
    }
    out.tables.push(table);
    Ok(out)
}

fn distorting_maps(l: f64, m: &Measure) -> Vec<(String, PlaneMap)> {
    let c = m.centroid().unwrap_or(Point2::origin());
    vec![
        (format!("shear.l={l}"), PlaneMap::shear_with_constant(l)),
        (format!("warp.l={l}"), PlaneMap::Warp { l }),
        (format!("spiral.l={l}"), PlaneMap::Spiral { l, cx: c.x, cy: c.y }),
    ]
}

/// c²(φ#μ)/(c²(μ) + μ(ℂ)) for shears, warps and spirals with each constant, plus isometry invariance.
pub fn bilipschitz_experiment(recipes: &[Recipe], constants: &[f64], seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new("bilipschitz", &["measure", "map", "l", "ratio"]);
    for (mi, (name, m)) in measures(recipes, seed)?.into_iter().enumerate() {
        let c2 = curvature_measure(&m, 0.0, red).value;
        let denom = c2 + m.total_mass();
        let mut rows = BTreeMap::new();
        rows.insert("identity".to_string(), c2 / denom);
        let c = m.centroid().unwrap_or(Point2::origin());
        let isometries = [
            ("quarter_turn.1", PlaneMap::QuarterTurn { k: 1 }, true),
            ("quarter_turn.2", PlaneMap::QuarterTurn { k: 2 }, true),
            ("quarter_turn.3", PlaneMap::QuarterTurn { k: 3 }, true),
            ("reflect", PlaneMap::Reflect, true),
            ("rotation.0.3", PlaneMap::Rotation { angle: 0.3, cx: c.x, cy: c.y }, false),
        ];
        for (label, map, exact) in isometries {
            let image = m.pushforward(|p| map.apply(p), 1.0)?;
            let v = curvature_measure(&image, 0.0, red).value;
            if exact {
                out.check(Check::eq(format!("{name}.{label}.curvature_difference"), v - c2, 0.0));
            } else {
                out.check(Check::le(format!("{name}.{label}.relative_gap"), relative_gap(v, c2), 1e-12));
            }
            rows.insert(label.to_string(), v / denom);
        }
        for &l in constants {
            for (ki, (label, map)) in distorting_maps(l, &m).into_iter().enumerate() {
                let image = m.pushforward(|p| map.apply(p), map.constant())?;
                let ratio = curvature_measure(&image, 0.0, red).value / denom;
                out.check(Check::holds(format!("{name}.{label}.finite"), ratio.is_finite()));
                table.push(vec![mi as f64, ki as f64, l, ratio]);
                rows.insert(label, ratio);
            }
        }
        table.next_block();
        for kind in ["shear", "warp", "spiral"] {
            let series: Vec<f64> = constants.iter().map(|l| rows[&format!("{kind}.l={l}")]).collect();
            let monotone = series.windows(2).all(|w| w[1] >= w[0]);
            out.observe(format!("{name}.{kind}.monotone_in_l"), if monotone { 1.0 } else { 0.0 });
        }
        out.record(&name, &rows);
    }
    out.tables.push(table);
    Ok(out)
}

pub fn theorem1_corpus(recipes: &[Recipe], seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new("norm-ratios", &["index", "ratio_fwd", "ratio_bwd"]);
    let (mut fwd, mut bwd): (f64, f64) = (0.0, 0.0);
    for (i, (name, m)) in measures(recipes, seed)?.into_iter().enumerate() {
        let grid = TruncationGrid::default_for(&m)?;
        let rec = theorem1_ratios(&m, &grid, red)?;
        out.check(Check::holds(format!("{name}.ratios_finite"), rec.ratio_fwd.is_finite() && rec.ratio_bwd.is_finite()));
        fwd = fwd.max(rec.ratio_fwd);
        bwd = bwd.max(rec.ratio_bwd);
        table.push(vec![i as f64, rec.ratio_fwd, rec.ratio_bwd]);
        out.record(&name, &rec);
    }
    out.observe("max_ratio_fwd", fwd);
    out.observe("max_ratio_bwd", bwd);
    out.tables.push(table);
    Ok(out)
}

#[derive(Serialize)]
struct BracketRow {
    p_inf: f64,
    p0: f64,
    growth: f64,
    mass: f64,
    bracket: f64,
    ratio_fwd: f64,
}

/// max p_∞/(p₀ + C*²μ) and the largest forward norm ratio over the corpus.
pub fn t0_bracket(recipes: &[Recipe], seed: u64, red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (mut bracket, mut fwd): (f64, f64) = (0.0, 0.0);
    for (name, m) in measures(recipes, seed)? {
        let p_inf = perm_self(KernelParam::Infinity, &m, 0.0, red).value;
        let p0 = perm_self(KernelParam::Finite(0.0), &m, 0.0, red).value;
        let growth = m.linear_growth_constant()?;
        let mass = m.total_mass();
        let b = p_inf / (p0 + growth * growth * mass);
        let rec = theorem1_ratios(&m, &TruncationGrid::default_for(&m)?, red)?;
        out.check(Check::holds(format!("{name}.bracket_finite"), b.is_finite()));
        bracket = bracket.max(b);
        fwd = fwd.max(rec.ratio_fwd);
        out.record(&name, &BracketRow { p_inf, p0, growth, mass, bracket: b, ratio_fwd: rec.ratio_fwd });
    }
    out.observe("max_bracket", bracket);
    out.observe("max_ratio_fwd", fwd);
    Ok(out)
}

pub fn c1_estimates(thetas: &[f64], samples: usize, seed: u64) -> Result<Outcome> {
    let estimates = thetas.par_iter().map(|&th| estimate_c1(th, samples, seed)).collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut table = Table::new("c1", &["theta", "upper_bound"]);
    for e in &estimates {
        out.check(Check::gt(format!("theta={}.positive", e.theta), e.upper_bound, 0.0));
        out.check(Check::le(format!("theta={}.at_most_two", e.theta), e.upper_bound, 2.0 * (1.0 + 1e-12)));
        out.observe(format!("theta={}.upper_bound", e.theta), e.upper_bound);
        out.record(format!("theta={}", e.theta), e);
        table.push(vec![e.theta, e.upper_bound]);
    }
    out.tables.push(table);
    Ok(out)
}

/// Fast paths against the naive loops on one measure, for every kernel in `ts` and each truncation.
pub fn verify_measure(m: &Measure, ts: &[f64], eps: &[f64], red: Reduction) -> Result<Outcome> {
    let mut out = Outcome::default();
    for &t in ts {
        let k = kernel_of(t);
        let label = t_label(t);
        for &e in eps {
            let fast = perm_self(k, m, e, red).value;
            let slow = naive::perm_measure(naive_t(t), m, e);
            out.check(Check::le(format!("perm.t={label}.eps={e}"), relative_gap(fast, slow), 1e-10));
            if e >= m.scale() && e > 0.0 {
                let fast = l2_norm_sq_t1(k, m, e, red);
                let slow = naive::l2_norm_sq_t1(naive_t(t), m, e);
                out.check(Check::le(format!("l2.t={label}.eps={e}"), relative_gap(fast, slow), 1e-10));
            }
        }
    }
    for &e in eps {
        let fast = curvature_measure(m, e, red).value;
        out.check(Check::le(format!("curvature.eps={e}"), relative_gap(fast, naive::curvature_measure(m, e)), 1e-10));
    }
    let fast = m.linear_growth_constant()?;
    out.check(Check::le("growth", relative_gap(fast, naive::growth_constant(m)), 1e-10));
    Ok(out)
}
