//! Library results against closed forms and direct loops written here.

use approx::assert_relative_eq;
use menger::measure::generate;
use menger::permutations::{curvature_measure, menger_curvature, perm_pointwise, perm_self};
use menger::sio::{l2_norm_sq_t1, mv_identity_report};
use menger::{naive, Atom, Kernel, Measure, Point, Recipe, Reduction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circumradius(a: Point, b: Point, c: Point) -> f64 {
    let (ab, bc, ca) = (a.dist(b), b.dist(c), c.dist(a));
    let s = (ab + bc + ca) / 2.0;
    let area = (s * (s - ab) * (s - bc) * (s - ca)).sqrt();
    ab * bc * ca / (4.0 * area)
}

fn k(t: Option<f64>, z: Point) -> f64 {
    let r2 = z.x * z.x + z.y * z.y;
    match t {
        None => z.x / r2,
        Some(t) => z.x.powi(3) / (r2 * r2) + t * z.x / r2,
    }
}

fn perm_by_permutations(t: Option<f64>, z: [Point; 3]) -> f64 {
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let d = |i: usize, j: usize| Point::new(z[i].x - z[j].x, z[i].y - z[j].y);
    orders.iter().map(|o| k(t, d(o[0], o[1])) * k(t, d(o[0], o[2]))).sum::<f64>() / 2.0
}

fn random_measure(n: usize, seed: u64) -> Measure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..n)
        .map(|_| Atom::new(Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0.1..1.0)))
        .collect();
    Measure::with_default_scale(atoms).unwrap()
}

#[test]
fn anchor_triple() {
    let (o, one, i) = (Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0));
    assert_relative_eq!(perm_pointwise(Kernel::Infinity, o, one, i).unwrap(), 0.5, max_relative = 1e-15);
    assert_relative_eq!(menger_curvature(o, one, i).unwrap(), std::f64::consts::SQRT_2, max_relative = 1e-15);
}

#[test]
fn curvature_is_reciprocal_circumradius() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let z: Vec<Point> = (0..3).map(|_| Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        let doubled_area = ((z[1].x - z[0].x) * (z[2].y - z[0].y) - (z[1].y - z[0].y) * (z[2].x - z[0].x)).abs();
        let longest = z[0].dist(z[1]).max(z[1].dist(z[2])).max(z[2].dist(z[0]));
        if doubled_area < 1e-2 * longest * longest {
            continue;
        }
        let c = menger_curvature(z[0], z[1], z[2]).unwrap();
        assert_relative_eq!(c, 1.0 / circumradius(z[0], z[1], z[2]), max_relative = 1e-12);
    }
}

#[test]
fn pointwise_perm_matches_six_term_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in [None, Some(0.0), Some(-0.5), Some(-1.5), Some(1.0), Some(3.0)] {
        let kernel = t.map_or(Kernel::Infinity, Kernel::Finite);
        for _ in 0..500 {
            let z = [0; 3].map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let fast = perm_pointwise(kernel, z[0], z[1], z[2]).unwrap();
            let slow = perm_by_permutations(t, z);
            assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1.0), "t={t:?}: {fast} vs {slow}");
        }
    }
}

#[test]
fn measure_sums_match_naive_loops() {
    let m = random_measure(25, 11);
    for t in [None, Some(0.0), Some(-0.75), Some(2.0)] {
        let kernel = t.map_or(Kernel::Infinity, Kernel::Finite);
        for eps in [0.0, 0.1, 0.4] {
            for red in [Reduction::Sequential, Reduction::Chunked { chunk: 3 }] {
                let fast = perm_self(kernel, &m, eps, red).value;
                let slow = naive::perm_measure(t, &m, eps);
                assert_relative_eq!(fast, slow, max_relative = 1e-10);
                let fast = l2_norm_sq_t1(kernel, &m, eps, red);
                let slow = naive::l2_norm_sq_t1(t, &m, eps);
                assert_relative_eq!(fast, slow, max_relative = 1e-10);
            }
        }
    }
}

#[test]
fn curvature_measure_is_four_perm_infinity() {
    let m = random_measure(30, 5);
    let c2 = curvature_measure(&m, 0.0, Reduction::default()).value;
    let p = perm_self(Kernel::Infinity, &m, 0.0, Reduction::default()).value;
    assert_relative_eq!(c2, 4.0 * p, max_relative = 1e-10);
    assert_relative_eq!(c2, naive::curvature_measure(&m, 0.0), max_relative = 1e-10);
}

#[test]
fn chunked_sum_ignores_thread_count() {
    let m = random_measure(40, 8);
    let red = Reduction::Chunked { chunk: 5 };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| perm_self(Kernel::Finite(0.0), &m, 0.0, red).value);
    let b = four.install(|| perm_self(Kernel::Finite(0.0), &m, 0.0, red).value);
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn mv_identity_holds_without_truncation_on_tiny_measure() {
    let m = random_measure(12, 21);
    let r = mv_identity_report(Kernel::Infinity, &m, m.scale(), Reduction::Sequential).unwrap();
    assert!(r.normalized_remainder.is_finite());
    let direct = naive::l2_norm_sq_t1(None, &m, m.scale());
    assert_relative_eq!(r.lhs, direct, max_relative = 1e-10);
}

#[test]
fn single_precision_tracks_double() {
    let m = generate(&Recipe::Circle { n: 20, radius: 0.5 }, 0).unwrap();
    let m32 = m.cast::<f32>();
    let a = perm_self(Kernel::Infinity, &m, 0.0, Reduction::default()).value;
    let b = perm_self(menger::KernelParam::<f32>::Infinity, &m32, 0.0, Reduction::default()).value as f64;
    assert_relative_eq!(a, b, max_relative = 1e-4);
}

#[test]
fn circle_curvature_closed_form() {
    let radius = 0.5;
    let m = generate(&Recipe::Circle { n: 40, radius }, 0).unwrap();
    let mass = m.total_mass();
    let c2 = curvature_measure(&m, 0.0, Reduction::default()).value;
    let n = m.len() as f64;
    let expected = n * (n - 1.0) * (n - 2.0) / radius.powi(2) * (mass / n).powi(3);
    assert_relative_eq!(c2, expected, max_relative = 1e-9);
}
