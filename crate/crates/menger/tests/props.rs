use menger::kernels::{kernel_eval, zero_lines};
use menger::permutations::{menger_curvature, perm_pointwise};
use menger::{Kernel, Point};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y)| Point::new(x, y))
}

fn kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![Just(Kernel::Infinity), (-4.0f64..4.0).prop_map(Kernel::Finite)]
}

fn separated(z: &[Point; 3]) -> bool {
    z[0].dist(z[1]) > 1e-3 && z[1].dist(z[2]) > 1e-3 && z[0].dist(z[2]) > 1e-3
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn kernels_are_odd(k in kernel(), z in point()) {
        prop_assume!(z.norm() > 1e-6);
        let a = kernel_eval(k, z).unwrap();
        let b = kernel_eval(k, Point::new(-z.x, -z.y)).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn perm_is_symmetric(k in kernel(), a in point(), b in point(), c in point()) {
        prop_assume!(separated(&[a, b, c]));
        let base = perm_pointwise(k, a, b, c).unwrap();
        for (x, y, z) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
            prop_assert!(close(base, perm_pointwise(k, x, y, z).unwrap(), 1e-9));
        }
    }

    #[test]
    fn perm_is_translation_invariant_and_scales_inverse_square(
        k in kernel(), a in point(), b in point(), c in point(), shift in point(), s in 0.1f64..10.0,
    ) {
        prop_assume!(separated(&[a, b, c]));
        let base = perm_pointwise(k, a, b, c).unwrap();
        let moved = perm_pointwise(k, a + shift, b + shift, c + shift).unwrap();
        let shortest = a.dist(b).min(b.dist(c)).min(a.dist(c));
        prop_assert!((base - moved).abs() <= 1e-9 * (1.0 + shift.norm()) / (shortest * shortest));
        let scaled = perm_pointwise(k, a.scale(s), b.scale(s), c.scale(s)).unwrap();
        prop_assert!(close(scaled * s * s, base, 1e-9) || base.abs() < 1e-12);
    }

    #[test]
    fn identity_and_comparison(a in point(), b in point(), c in point()) {
        prop_assume!(separated(&[a, b, c]));
        let pinf = perm_pointwise(Kernel::Infinity, a, b, c).unwrap();
        let p0 = perm_pointwise(Kernel::Finite(0.0), a, b, c).unwrap();
        let curv = menger_curvature(a, b, c).unwrap();
        prop_assert!(pinf >= 0.0);
        prop_assert!(p0 >= 0.0);
        prop_assert!(p0 <= 2.0 * pinf * (1.0 + 1e-12) + 1e-300);
        prop_assert!((curv * curv / 4.0 - pinf).abs() <= 1e-8 * pinf.max(1e-300) || curv < 1e-6);
    }

    #[test]
    fn zero_lines_vanish(t in -3.0f64..3.0, r in 0.1f64..5.0) {
        for theta in zero_lines(t) {
            let z = Point::new(r * theta.cos(), r * theta.sin());
            let v = kernel_eval(Kernel::Finite(t), z).unwrap();
            prop_assert!(v.abs() <= 1e-12 / r, "t={} theta={} v={}", t, theta, v);
        }
    }

    #[test]
    fn collinear_triples_vanish(k in kernel(), a in point(), d in point(), s in 0.1f64..3.0, u in -3.0f64..-0.1) {
        prop_assume!(d.norm() > 1e-2);
        let b = a + d.scale(s);
        let c = a + d.scale(u);
        prop_assert_eq!(perm_pointwise(k, a, b, c).unwrap(), 0.0);
        prop_assert_eq!(menger_curvature(a, b, c).unwrap(), 0.0);
    }
}
