use menger::measure::{generate, PlaneMap};
use menger::{Atom, Disc, Error, Measure, Point, Recipe};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn growth_by_brute_force(m: &Measure) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.len() {
        let x = m.pos(i);
        let mut radii: Vec<f64> = (0..m.len()).map(|j| x.dist(m.pos(j))).collect();
        radii.extend([m.scale(), m.diam()]);
        for r in radii.into_iter().filter(|&r| r >= m.scale()) {
            let mass: f64 = (0..m.len()).filter(|&j| x.dist(m.pos(j)) < r).map(|j| m.weight(j)).sum();
            best = best.max(mass / r);
        }
    }
    best
}

#[test]
fn json_round_trip_is_bit_exact() {
    let recipe = Recipe::Perturbed { base: Box::new(Recipe::Circle { n: 50, radius: 0.3 }), amplitude: 1e-3 };
    let m = generate(&recipe, 17).unwrap();
    let back = Measure::from_json(&m.to_json()).unwrap();
    assert_eq!(back.len(), m.len());
    assert_eq!(back.scale().to_bits(), m.scale().to_bits());
    for (a, b) in m.atoms().iter().zip(back.atoms()) {
        assert_eq!(a.pos.x.to_bits(), b.pos.x.to_bits());
        assert_eq!(a.pos.y.to_bits(), b.pos.y.to_bits());
        assert_eq!(a.weight.to_bits(), b.weight.to_bits());
    }
    assert_eq!(back.to_json(), m.to_json());
}

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("menger-measure-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.json");
    let m = generate(&Recipe::Cantor4 { level: 2 }, 0).unwrap();
    m.save(&path).unwrap();
    assert_eq!(Measure::load(&path).unwrap(), m);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn generators_are_deterministic() {
    let r: Recipe = "perturbed:amplitude=0.01/graph:n=40,slope=0.3".parse().unwrap();
    assert_eq!(generate(&r, 5).unwrap(), generate(&r, 5).unwrap());
    assert_ne!(generate(&r, 5).unwrap(), generate(&r, 6).unwrap());
}

#[test]
fn recipe_text_round_trips() {
    for r in [
        Recipe::Segment { n: 7 },
        Recipe::Line { n: 9, angle: 0.7, length: 2.0 },
        Recipe::LipschitzGraph { n: 12, slope: 0.25 },
        Recipe::Circle { n: 5, radius: 1.5 },
        Recipe::Cantor4 { level: 3 },
        Recipe::Perturbed { base: Box::new(Recipe::Segment { n: 4 }), amplitude: 0.5 },
    ] {
        assert_eq!(r.to_string().parse::<Recipe>().unwrap(), r);
        assert_eq!(generate(&r, 1).unwrap().len(), r.atom_count());
    }
    assert!("spiral:n=3".parse::<Recipe>().is_err());
    assert!("segment:n=3,bogus=1".parse::<Recipe>().is_err());
}

#[test]
fn masses_of_the_families() {
    let seg = generate(&Recipe::Segment { n: 64 }, 0).unwrap();
    assert!((seg.total_mass() - 1.0).abs() < 1e-14);
    let circle = generate(&Recipe::Circle { n: 64, radius: 0.5 }, 0).unwrap();
    assert!((circle.total_mass() - std::f64::consts::PI).abs() < 1e-13);
    let cantor = generate(&Recipe::Cantor4 { level: 3 }, 0).unwrap();
    assert!((cantor.total_mass() - 1.0).abs() < 1e-14);
    assert_eq!(cantor.len(), 64);
}

#[test]
fn invalid_measures_are_rejected() {
    let p = Point::new(0.0, 0.0);
    assert!(matches!(Measure::new(vec![Atom::new(p, 1.0), Atom::new(p, 2.0)], 0.1), Err(Error::InvalidMeasure(_))));
    assert!(Measure::new(vec![Atom::new(p, -1.0)], 0.1).is_err());
    assert!(Measure::new(vec![Atom::new(Point::new(f64::NAN, 0.0), 1.0)], 0.1).is_err());
    assert!(Measure::new(vec![Atom::new(p, 1.0), Atom::new(Point::new(0.1, 0.0), 1.0)], 0.5).is_err());
    assert!(generate(&Recipe::Circle { n: 3, radius: -1.0 }, 0).is_err());
}

#[test]
fn growth_constant_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for recipe in [Recipe::Segment { n: 30 }, Recipe::Cantor4 { level: 2 }, Recipe::Circle { n: 25, radius: 0.5 }] {
        let m = generate(&recipe, 0).unwrap();
        let c = m.linear_growth_constant().unwrap();
        assert!((c - growth_by_brute_force(&m)).abs() <= 1e-12 * c, "{recipe}");
    }
    let atoms = (0..20)
        .map(|_| Atom::new(Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), rng.gen_range(0.1..1.0)))
        .collect();
    let m = Measure::with_default_scale(atoms).unwrap();
    let c = m.linear_growth_constant().unwrap();
    assert!((c - growth_by_brute_force(&m)).abs() <= 1e-12 * c);
}

#[test]
fn balls_are_open() {
    let m = generate(&Recipe::Segment { n: 3 }, 0).unwrap();
    let ball = Disc::new(Point::new(0.0, 0.0), 0.5);
    assert_eq!(m.indices_in(&ball), vec![0]);
    assert!((m.mass_in(&Disc::new(Point::new(0.0, 0.0), 0.5000001)) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn plane_maps_respect_their_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let maps = [
        PlaneMap::QuarterTurn { k: 1 },
        PlaneMap::Reflect,
        PlaneMap::Rotation { angle: 0.3, cx: 0.5, cy: 0.5 },
        PlaneMap::shear_with_constant(1.5),
        PlaneMap::Warp { l: 1.2 },
        PlaneMap::Spiral { l: 1.1, cx: 0.5, cy: 0.5 },
    ];
    for map in maps {
        let l = map.constant();
        for _ in 0..2000 {
            let p = Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let q = Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let ratio = map.apply(p).dist(map.apply(q)) / p.dist(q);
            assert!(ratio <= l * (1.0 + 1e-9) && ratio >= (1.0 - 1e-9) / l, "{map:?}: ratio {ratio}, constant {l}");
        }
    }
}

#[test]
fn pushforward_keeps_weights_and_shrinks_scale() {
    let m = generate(&Recipe::LipschitzGraph { n: 30, slope: 0.2 }, 0).unwrap();
    let map = PlaneMap::Warp { l: 1.5 };
    let image = m.pushforward(|p| map.apply(p), map.constant()).unwrap();
    assert_eq!(image.len(), m.len());
    assert!((image.total_mass() - m.total_mass()).abs() < 1e-15);
    assert!((image.scale() - m.scale() / 1.5).abs() < 1e-15);
    assert!(m.pushforward(|p| p, 0.5).is_err());
}
