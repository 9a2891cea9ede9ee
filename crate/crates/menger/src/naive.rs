//! Plain reference implementations: direct loops, no precomputation, no parallelism.
//! Used to cross-check the fast paths.

use crate::measure::{DiscreteMeasure, Point2};

/// k_t(x, y) written out; `None` is the t = ∞ kernel Re z/|z|².
pub fn kernel(t: Option<f64>, x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    match t {
        Some(t) => x * x * x / (r2 * r2) + t * x / r2,
        None => x / r2,
    }
}

fn collinear(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> bool {
    let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let sides = [(a.x - b.x, a.y - b.y), (a.x - c.x, a.y - c.y), (b.x - c.x, b.y - c.y)];
    let longest = sides.iter().map(|(x, y)| x * x + y * y).fold(0.0, f64::max);
    det.abs() < 2e-14 * longest
}

/// p_t(a, b, c) as the sum of three kernel products.
pub fn perm(t: Option<f64>, a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    if collinear(a, b, c) {
        return 0.0;
    }
    let k = |p: Point2<f64>, q: Point2<f64>| kernel(t, p.x - q.x, p.y - q.y);
    k(a, b) * k(a, c) + k(b, a) * k(b, c) + k(c, a) * k(c, b)
}

/// Reciprocal circumradius from the three side lengths and the area.
pub fn curvature(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    if collinear(a, b, c) {
        return 0.0;
    }
    let ab = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let ac = ((a.x - c.x).powi(2) + (a.y - c.y).powi(2)).sqrt();
    let bc = ((b.x - c.x).powi(2) + (b.y - c.y).powi(2)).sqrt();
    let area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
    4.0 * area / (ab * ac * bc)
}

fn far_enough(p: Point2<f64>, q: Point2<f64>, eps: f64) -> bool {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt() >= eps
}

/// Σ over ordered triples of distinct atoms with all pairwise distances ≥ eps.
fn triple_loop(m: &DiscreteMeasure<f64>, eps: f64, f: impl Fn(Point2<f64>, Point2<f64>, Point2<f64>) -> f64) -> f64 {
    let n = m.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                if i == j || i == l || j == l {
                    continue;
                }
                let (a, b, c) = (m.pos(i), m.pos(j), m.pos(l));
                if far_enough(a, b, eps) && far_enough(a, c, eps) && far_enough(b, c, eps) {
                    total += f(a, b, c) * m.weight(i) * m.weight(j) * m.weight(l);
                }
            }
        }
    }
    total
}

pub fn perm_measure(t: Option<f64>, m: &DiscreteMeasure<f64>, eps: f64) -> f64 {
    triple_loop(m, eps, |a, b, c| perm(t, a, b, c))
}

/// c²(μ) restricted to triples with pairwise distances ≥ eps.
pub fn curvature_measure(m: &DiscreteMeasure<f64>, eps: f64) -> f64 {
    triple_loop(m, eps, |a, b, c| curvature(a, b, c).powi(2))
}

/// ‖T_{k_t,ε}1‖² as a double loop.
pub fn l2_norm_sq_t1(t: Option<f64>, m: &DiscreteMeasure<f64>, eps: f64) -> f64 {
    let n = m.len();
    let mut total = 0.0;
    for i in 0..n {
        let z = m.pos(i);
        let mut v = 0.0;
        for j in 0..n {
            let w = m.pos(j);
            if i != j && far_enough(z, w, eps) {
                v += kernel(t, z.x - w.x, z.y - w.y) * m.weight(j);
            }
        }
        total += v * v * m.weight(i);
    }
    total
}

/// max over atoms x and radii r ∈ {scale, diam} ∪ {|x − y|} with r ≥ scale of μ(B(x, r))/r, B open.
pub fn growth_constant(m: &DiscreteMeasure<f64>) -> f64 {
    let n = m.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let mut radii = vec![m.scale(), m.diam()];
        for j in 0..n {
            if i != j {
                radii.push(m.pos(i).dist(m.pos(j)));
            }
        }
        for &r in &radii {
            if r < m.scale() || r <= 0.0 {
                continue;
            }
            let mass: f64 = (0..n).filter(|&j| m.pos(i).dist(m.pos(j)) < r).map(|j| m.weight(j)).sum();
            best = best.max(mass / r);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_triangle() {
        let (a, b, c) = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        assert!((perm(None, a, b, c) - 0.5).abs() < 1e-15);
        assert!((curvature(a, b, c) - 2f64.sqrt()).abs() < 1e-15);
    }
}
