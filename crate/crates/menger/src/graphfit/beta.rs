use serde::{Deserialize, Serialize};

use crate::kernels::Line;
use crate::measure::{Ball, DiscreteMeasure, Point2};
use crate::reduce::Compensated;
use crate::scalar::Real;

/// Relative size of the smaller principal moment below which the fit is exactly a line.
pub const COLLINEAR_MOMENT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaResult<T> {
    pub beta: T,
    pub beta_sq: T,
    /// The best approximating line L.
    pub best_line: Line<T>,
    pub ball: Ball<T>,
    pub mass_in_ball: T,
    /// Σ w·dist(y, L)² over atoms in the ball.
    pub residual: T,
    /// The ball held no atoms; the line is the horizontal line through the center.
    pub empty: bool,
}

/// Σ w·dist(y, line)² over atoms strictly inside `ball`.
pub fn line_residual<T: Real>(m: &DiscreteMeasure<T>, ball: &Ball<T>, line: &Line<T>) -> T {
    let mut acc = Compensated::new();
    for a in m.atoms() {
        if ball.contains(a.pos) {
            let d = line.offset(a.pos);
            acc.add(a.weight * d * d);
        }
    }
    acc.value()
}

/// β_{μ,2}(B) and its best line, by the weighted principal axis of μ⌊B.
pub fn beta2<T: Real>(m: &DiscreteMeasure<T>, ball: &Ball<T>) -> BetaResult<T> {
    let inside: Vec<_> = m.atoms().iter().filter(|a| ball.contains(a.pos)).copied().collect();
    if inside.is_empty() {
        return BetaResult {
            beta: T::zero(),
            beta_sq: T::zero(),
            best_line: Line { anchor: ball.center, direction: Point2::new(T::one(), T::zero()) },
            ball: *ball,
            mass_in_ball: T::zero(),
            residual: T::zero(),
            empty: true,
        };
    }
    let (mut mass, mut sx, mut sy) = (Compensated::new(), Compensated::new(), Compensated::new());
    for a in &inside {
        mass.add(a.weight);
        sx.add(a.weight * a.pos.x);
        sy.add(a.weight * a.pos.y);
    }
    let mass = mass.value();
    let centroid = Point2::new(sx.value() / mass, sy.value() / mass);
    let (mut sxx, mut sxy, mut syy) = (Compensated::new(), Compensated::new(), Compensated::new());
    for a in &inside {
        let d = a.pos - centroid;
        sxx.add(a.weight * d.x * d.x);
        sxy.add(a.weight * d.x * d.y);
        syy.add(a.weight * d.y * d.y);
    }
    let (a, b, c) = (sxx.value(), sxy.value(), syy.value());
    let phi = (T::lit(2.0) * b).atan2(a - c) / T::lit(2.0);
    let line = Line { anchor: centroid, direction: Point2::new(phi.cos(), phi.sin()) };
    let mut residual = T::zero();
    let mut acc = Compensated::new();
    for p in &inside {
        let d = line.offset(p.pos);
        acc.add(p.weight * d * d);
    }
    let raw = acc.value();
    if raw > T::lit(COLLINEAR_MOMENT) * (a + c) {
        residual = raw;
    }
    let r3 = ball.radius * ball.radius * ball.radius;
    let beta_sq = residual / r3;
    BetaResult { beta: beta_sq.sqrt(), beta_sq, best_line: line, ball: *ball, mass_in_ball: mass, residual, empty: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    #[test]
    fn three_point_example() {
        let m = DiscreteMeasure::<f64>::with_default_scale(vec![
            Atom::new(Point2::new(-1.0, 0.0), 1.0),
            Atom::new(Point2::new(0.0, 0.6), 1.0),
            Atom::new(Point2::new(1.0, 0.0), 1.0),
        ])
        .unwrap();
        let r = beta2(&m, &Ball::new(Point2::origin(), 2.0));
        assert!((r.beta_sq - 0.03).abs() < 1e-15);
        assert!((r.beta - 0.03f64.sqrt()).abs() < 1e-15);
        assert!(r.best_line.direction.y.abs() < 1e-15);
    }

    #[test]
    fn collinear_and_single() {
        let line: Vec<_> = (0..7).map(|i| Atom::new(Point2::new(0.3 * i as f64, 0.7 * i as f64 + 0.1), 0.5)).collect();
        let m = DiscreteMeasure::with_default_scale(line).unwrap();
        let r = beta2(&m, &Ball::new(Point2::new(0.5, 1.0), 10.0));
        assert_eq!(r.beta, 0.0);
        assert!(r.best_line.dist(Point2::new(0.3 * 3.0, 0.7 * 3.0 + 0.1)) < 1e-12);
        let one = DiscreteMeasure::with_default_scale(vec![Atom::new(Point2::new(2.0, 3.0), 1.0)]).unwrap();
        let r = beta2(&one, &Ball::new(Point2::new(2.0, 3.0), 1.0));
        assert_eq!(r.beta, 0.0);
        assert!(!r.empty);
        let r = beta2(&one, &Ball::new(Point2::new(9.0, 3.0), 1.0));
        assert!(r.empty);
    }
}
