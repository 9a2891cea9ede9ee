//! Lattice, corona and graph construction on small measures.

use std::collections::BTreeSet;

use menger::corona::{build_top, build_tree, Label, Params};
use menger::graphfit::{beta2, bump, build_lipschitz_f, partition_of_unity};
use menger::lattice::{Lattice, LatticeConfig};
use menger::measure::generate;
use menger::{AffineLine, Disc, Point, Recipe, Reduction};

fn lattice(recipe: Recipe) -> Lattice {
    Lattice::build(&generate(&recipe, 0).unwrap(), LatticeConfig::default()).unwrap()
}

fn brute_force_beta_sq(points: &[(Point, f64)], radius: f64) -> f64 {
    let mass: f64 = points.iter().map(|p| p.1).sum();
    let cx = points.iter().map(|p| p.0.x * p.1).sum::<f64>() / mass;
    let cy = points.iter().map(|p| p.0.y * p.1).sum::<f64>() / mass;
    let mut best = f64::INFINITY;
    for k in 0..20000 {
        let angle = std::f64::consts::PI * k as f64 / 20000.0;
        let (s, c) = angle.sin_cos();
        let res: f64 = points.iter().map(|(p, w)| w * (-(p.x - cx) * s + (p.y - cy) * c).powi(2)).sum();
        best = best.min(res);
    }
    best / (radius * radius * radius)
}

#[test]
fn every_level_partitions_the_atoms() {
    for recipe in [Recipe::Cantor4 { level: 3 }, Recipe::Circle { n: 50, radius: 0.5 }, Recipe::Segment { n: 40 }] {
        let lat = lattice(recipe.clone());
        let n = lat.measure.len();
        for level in &lat.levels {
            let mut seen = vec![false; n];
            for &q in level {
                for &a in &lat.cube(q).members {
                    assert!(!seen[a], "{recipe}: atom {a} in two cubes");
                    seen[a] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "{recipe}: level misses atoms");
        }
        for q in &lat.cubes {
            if !q.children.is_empty() {
                let union: BTreeSet<usize> =
                    q.children.iter().flat_map(|&c| lat.cube(c).members.iter().copied()).collect();
                assert_eq!(union, q.members.iter().copied().collect::<BTreeSet<_>>());
            }
            let mass: f64 = q.members.iter().map(|&a| lat.measure.weight(a)).sum();
            assert!((mass - q.mass).abs() <= 1e-12 * q.mass.max(1.0));
        }
        assert!(lat.levels.last().unwrap().iter().all(|&q| lat.cube(q).is_singleton()));
        assert!(lat.cube(lat.root()).doubling);
    }
}

#[test]
fn lattice_dump_is_stable() {
    let a = serde_json::to_string(&lattice(Recipe::Cantor4 { level: 2 }).dump()).unwrap();
    let b = serde_json::to_string(&lattice(Recipe::Cantor4 { level: 2 }).dump()).unwrap();
    assert_eq!(a, b);
    let keys: Vec<&str> = ["\"c0\"", "\"a0\"", "\"unit\"", "\"cubes\"", "\"report\""].to_vec();
    let pos: Vec<usize> = keys.iter().map(|k| a.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn beta_matches_angle_scan() {
    let m = generate(&Recipe::Circle { n: 40, radius: 0.5 }, 0).unwrap();
    let ball = Disc::new(Point::new(0.5, 0.0), 0.4);
    let b = beta2(&m, &ball);
    let inside: Vec<(Point, f64)> =
        m.atoms().iter().filter(|a| ball.contains(a.pos)).map(|a| (a.pos, a.weight)).collect();
    let oracle = brute_force_beta_sq(&inside, ball.radius);
    assert!((b.beta_sq - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", b.beta_sq);
}

#[test]
fn beta_vanishes_on_lines() {
    let m = generate(&Recipe::Line { n: 30, angle: 0.7, length: 1.0 }, 0).unwrap();
    let b = beta2(&m, &Disc::new(Point::new(0.2, 0.2), 1.0));
    assert_eq!(b.beta_sq, 0.0);
    let along = AffineLine::from_angle(Point::new(0.0, 0.0), 0.7);
    assert!(b.best_line.same_line(&along, 1e-9));
}

#[test]
fn bump_profile() {
    assert_eq!(bump(0.0, 1.0, 1.9), 1.0);
    assert_eq!(bump(0.0, 1.0, -2.0), 1.0);
    assert_eq!(bump(0.0, 1.0, 3.0), 0.0);
    assert!((bump(0.0, 1.0, 2.5) - 0.5).abs() < 1e-15);
    let h = 1e-6;
    for u in [2.0, 3.0] {
        let left = (bump(0.0, 1.0, u) - bump(0.0, 1.0, u - h)) / h;
        let right = (bump(0.0, 1.0, u + h) - bump(0.0, 1.0, u)) / h;
        assert!(left.abs() < 1e-5 && right.abs() < 1e-5);
    }
}

#[test]
fn segment_has_no_stopping_cubes_and_flat_graph() {
    let lat = lattice(Recipe::Segment { n: 64 });
    let params = Params::default();
    let tree = build_tree(&lat, &params, lat.root()).unwrap();
    assert!(tree.stop.is_empty());
    assert!(tree.next.is_empty());
    let g = build_lipschitz_f(&lat, &tree, &params).unwrap();
    for (_, f) in g.curve(500) {
        assert_eq!(f, 0.0);
    }
    let corona = build_top(&lat, &params, None).unwrap();
    assert_eq!(corona.top(), vec![lat.root()]);
    assert!(corona.checks(&lat).iter().all(|c| c.passed));
}

#[test]
fn stopping_cubes_are_disjoint_and_next_is_doubling() {
    let lat = lattice(Recipe::Cantor4 { level: 3 });
    let params = Params::default();
    let corona = build_top(&lat, &params, None).unwrap();
    for tree in &corona.trees {
        for (i, &a) in tree.stop.iter().enumerate() {
            for &b in &tree.stop[i + 1..] {
                assert!(!lat.is_within(a, b) && !lat.is_within(b, a));
            }
        }
        for &q in &tree.next {
            assert!(lat.cube(q).doubling);
            assert_ne!(q, tree.root);
        }
        assert!(tree.checks(&lat, &params).iter().all(|c| c.passed));
        let labelled: Vec<_> = tree.verdicts.iter().filter(|v| v.label.is_stop()).map(|v| v.cube).collect();
        assert!(tree.stop.iter().all(|q| labelled.contains(q)));
        assert!(tree.verdicts.windows(2).all(|w| (w[0].level, w[0].cube) < (w[1].level, w[1].cube)));
    }
    let dump = corona.dump(&lat, Reduction::default()).unwrap();
    let roots: Vec<_> = dump.trees.iter().map(|t| (t.level, t.root)).collect();
    let mut sorted = roots.clone();
    sorted.sort();
    assert_eq!(roots, sorted);
}

#[test]
fn big_alpha_graph_is_lipschitz_with_unit_partition() {
    let lat = lattice(Recipe::LipschitzGraph { n: 64, slope: 0.2 });
    let params = Params { alpha: 1e8, ..Params::default() };
    let tree = build_tree(&lat, &params, lat.root()).unwrap();
    assert!(!tree.family(Label::Bp).contains(&lat.root()));
    let g = build_lipschitz_f(&lat, &tree, &params).unwrap();
    assert!(g.lipschitz_estimate <= 1.0);
    let (lo, hi) = (g.cover.window_lo, g.cover.window_hi);
    for k in 0..=2000 {
        let u = lo + (hi - lo) * k as f64 / 2000.0;
        let w = partition_of_unity(&g.cover, u);
        if !w.uncovered {
            assert!((w.total() - 1.0).abs() <= 1e-12);
        }
    }
    assert!(g.checks(&lat, &tree).unwrap().iter().all(|c| c.passed));
}
