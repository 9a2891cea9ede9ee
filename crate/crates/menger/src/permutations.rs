//! Permutations of kernels, Menger curvature and their triple integrals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{vertical_angle_sum, KernelParam};
use crate::measure::{Ball, DiscreteMeasure, Point2};
use crate::reduce::{Accumulator, Reduction};
use crate::scalar::Real;

/// Triangles with area below this multiple of the squared longest side count as collinear.
pub const DEGENERATE_AREA: f64 = 1e-14;

/// The truncation window of a triple integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum Truncation<T> {
    /// All pairwise distances at least `eps`; `eps = 0` keeps every triple of distinct points.
    Epsilon { eps: T },
    /// `δ·r ≤ |z1 − z2| ≤ r/δ`.
    Window { delta: T, radius: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleIntegralResult<T> {
    pub value: T,
    pub triples_counted: u64,
    pub truncation: Truncation<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignScanResult<T> {
    pub t: T,
    pub min_value: T,
    pub argmin_triple: [Point2<T>; 3],
    pub samples: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    pub theta: f64,
    /// Empirical infimum of p₀/p_∞ over admissible samples: an upper bound on c₁(θ).
    pub upper_bound: f64,
    pub witness: [Point2<f64>; 3],
    pub samples: u64,
    pub admissible: u64,
}

/// Whether a triangle with doubled area `area2` and longest squared side `max_sq` is degenerate.
#[inline(always)]
fn degenerate<T: Real>(area2: T, max_sq: T) -> bool {
    area2 < T::lit(2.0 * DEGENERATE_AREA) * max_sq
}

/// Whether the triple is degenerate (area below the collinearity threshold).
pub fn is_degenerate<T: Real>(z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> bool {
    let area2 = (z2 - z1).cross(z3 - z1).abs();
    let max_sq = (z1 - z2).norm_sqr().max((z1 - z3).norm_sqr()).max((z2 - z3).norm_sqr());
    degenerate(area2, max_sq)
}

/// p_K without validity checks; degenerate triples give 0.
#[inline(always)]
pub fn perm_unchecked<T: Real>(k: KernelParam<T>, z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> T {
    if is_degenerate(z1, z2, z3) {
        return T::zero();
    }
    let k12 = k.apply(z1 - z2);
    let k13 = k.apply(z1 - z3);
    let k23 = k.apply(z2 - z3);
    k12 * k13 + (-k12) * k23 + (-k13) * (-k23)
}

/// p_K(z1,z2,z3) = K(z1−z2)K(z1−z3) + K(z2−z1)K(z2−z3) + K(z3−z1)K(z3−z2).
pub fn perm_pointwise<T: Real>(k: KernelParam<T>, z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> Result<T> {
    if z1 == z2 || z1 == z3 || z2 == z3 {
        return Err(Error::CoincidentPoints);
    }
    Ok(perm_unchecked(k, z1, z2, z3))
}

/// c(z1,z2,z3) = 1/R = 4·Area/(|z1−z2||z1−z3||z2−z3|), zero for degenerate triples.
pub fn menger_curvature<T: Real>(z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> Result<T> {
    if z1 == z2 || z1 == z3 || z2 == z3 {
        return Err(Error::CoincidentPoints);
    }
    Ok(curvature_unchecked(z1, z2, z3))
}

#[inline(always)]
fn curvature_unchecked<T: Real>(z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> T {
    if is_degenerate(z1, z2, z3) {
        return T::zero();
    }
    let area2 = (z2 - z1).cross(z3 - z1).abs();
    T::lit(2.0) * area2 / ((z1 - z2).norm() * (z1 - z3).norm() * (z2 - z3).norm())
}

/// Pairwise kernel values and distances between two point sets.
struct PairTable<T> {
    cols: usize,
    kernel: Vec<T>,
    dist: Vec<T>,
}

impl<T: Real> PairTable<T> {
    fn new(k: KernelParam<T>, a: &[Point2<T>], b: &[Point2<T>]) -> Self {
        let mut kernel = Vec::with_capacity(a.len() * b.len());
        let mut dist = Vec::with_capacity(a.len() * b.len());
        for &p in a {
            for &q in b {
                let d = p - q;
                dist.push(d.norm());
                kernel.push(if p == q { T::zero() } else { k.apply(d) });
            }
        }
        Self { cols: b.len(), kernel, dist }
    }

    #[inline(always)]
    fn k(&self, i: usize, j: usize) -> T {
        self.kernel[i * self.cols + j]
    }

    #[inline(always)]
    fn d(&self, i: usize, j: usize) -> T {
        self.dist[i * self.cols + j]
    }
}

fn positions<T: Real>(m: &DiscreteMeasure<T>) -> Vec<Point2<T>> {
    m.atoms().iter().map(|a| a.pos).collect()
}

fn weights<T: Real>(m: &DiscreteMeasure<T>) -> Vec<T> {
    m.atoms().iter().map(|a| a.weight).collect()
}

/// Generic weighted triple sum of `p_K` over ordered triples admitted by `admit(d12, d13, d23)`.
fn triple_sum<T, A>(
    k: KernelParam<T>,
    m1: &DiscreteMeasure<T>,
    m2: &DiscreteMeasure<T>,
    m3: &DiscreteMeasure<T>,
    reduction: Reduction,
    admit: A,
) -> (T, u64)
where
    T: Real,
    A: Fn(T, T, T) -> bool + Sync + Send,
{
    let (p1, p2, p3) = (positions(m1), positions(m2), positions(m3));
    let (w1, w2, w3) = (weights(m1), weights(m2), weights(m3));
    let t12 = PairTable::new(k, &p1, &p2);
    let t13 = PairTable::new(k, &p1, &p3);
    let t23 = PairTable::new(k, &p2, &p3);
    reduction.fold(p1.len(), |i, acc: &mut Accumulator<T>| {
        let mut count = 0u64;
        for j in 0..p2.len() {
            let d12 = t12.d(i, j);
            if d12 == T::zero() {
                continue;
            }
            let k12 = t12.k(i, j);
            let wij = w1[i] * w2[j];
            for l in 0..p3.len() {
                let (d13, d23) = (t13.d(i, l), t23.d(j, l));
                if d13 == T::zero() || d23 == T::zero() || !admit(d12, d13, d23) {
                    continue;
                }
                count += 1;
                if is_degenerate(p1[i], p2[j], p3[l]) {
                    continue;
                }
                let (k13, k23) = (t13.k(i, l), t23.k(j, l));
                let p = k12 * k13 + (-k12) * k23 + (-k13) * (-k23);
                acc.add(p * wij * w3[l]);
            }
        }
        count
    })
}

/// p_{K,ε}(μ1, μ2, μ3): the weighted sum of p_K over ordered triples with all pairwise distances ≥ ε.
pub fn perm_measure<T: Real>(
    k: KernelParam<T>,
    m1: &DiscreteMeasure<T>,
    m2: &DiscreteMeasure<T>,
    m3: &DiscreteMeasure<T>,
    eps: T,
    reduction: Reduction,
) -> TripleIntegralResult<T> {
    let (value, triples_counted) =
        triple_sum(k, m1, m2, m3, reduction, |a, b, c| a >= eps && b >= eps && c >= eps);
    TripleIntegralResult { value, triples_counted, truncation: Truncation::Epsilon { eps } }
}

/// p_{K,ε}(μ) for a single measure.
pub fn perm_self<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> TripleIntegralResult<T> {
    perm_measure(k, m, m, m, eps, reduction)
}

/// c²_ε(μ): the weighted sum of c(z1,z2,z3)² over ordered triples with pairwise distances ≥ ε.
pub fn curvature_measure<T: Real>(m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> TripleIntegralResult<T> {
    let p = positions(m);
    let w = weights(m);
    let n = p.len();
    let (value, triples_counted) = reduction.fold(n, |i, acc: &mut Accumulator<T>| {
        let mut count = 0;
        for j in 0..n {
            if j == i || p[i].dist(p[j]) < eps {
                continue;
            }
            for l in 0..n {
                if l == i || l == j || p[i].dist(p[l]) < eps || p[j].dist(p[l]) < eps {
                    continue;
                }
                count += 1;
                let c = curvature_unchecked(p[i], p[j], p[l]);
                acc.add(c * c * w[i] * w[j] * w[l]);
            }
        }
        count
    });
    TripleIntegralResult { value, triples_counted, truncation: Truncation::Epsilon { eps } }
}

/// p₀^{[δ,Q]}(μ_inner, μ_mid, μ_outer): the k₀ triple sum restricted to `δ·r ≤ |z1−z2| ≤ r/δ`.
pub fn perm_truncated_window<T: Real>(
    inner: &DiscreteMeasure<T>,
    mid: &DiscreteMeasure<T>,
    outer: &DiscreteMeasure<T>,
    delta: T,
    q_radius: T,
    reduction: Reduction,
) -> Result<TripleIntegralResult<T>> {
    check_window(delta, q_radius)?;
    let (lo, hi) = (delta * q_radius, q_radius / delta);
    let (value, triples_counted) =
        triple_sum(KernelParam::Finite(T::zero()), inner, mid, outer, reduction, |d12, _, _| d12 >= lo && d12 <= hi);
    Ok(TripleIntegralResult { value, triples_counted, truncation: Truncation::Window { delta, radius: q_radius } })
}

fn check_window<T: Real>(delta: T, q_radius: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidParameter(format!("window parameter must lie in (0,1), got {delta}")));
    }
    if !(q_radius > T::zero()) {
        return Err(Error::InvalidParameter(format!("window radius must be positive, got {q_radius}")));
    }
    Ok(())
}

/// p₀^{[δ,Q]}(x, μ2, μ3): the double sum over `(y, z)` with `δ·r ≤ |x−y| ≤ r/δ`.
pub fn perm_at_point<T: Real>(
    x: Point2<T>,
    mid: &DiscreteMeasure<T>,
    outer: &DiscreteMeasure<T>,
    delta: T,
    q_radius: T,
    reduction: Reduction,
) -> Result<T> {
    check_window(delta, q_radius)?;
    let (lo, hi) = (delta * q_radius, q_radius / delta);
    let k = KernelParam::Finite(T::zero());
    let (p2, p3) = (positions(mid), positions(outer));
    let (w2, w3) = (weights(mid), weights(outer));
    let (value, _) = reduction.fold(p2.len(), |j, acc: &mut Accumulator<T>| {
        let y = p2[j];
        let dxy = x.dist(y);
        if y == x || dxy < lo || dxy > hi {
            return 0;
        }
        let mut count = 0;
        for l in 0..p3.len() {
            let z = p3[l];
            if z == x || z == y {
                continue;
            }
            count += 1;
            acc.add(perm_unchecked(k, x, y, z) * w2[j] * w3[l]);
        }
        count
    });
    Ok(value)
}

/// A low-discrepancy sequence in `dim` dimensions (additive recurrence on the generalized golden ratio).
struct Kronecker {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl Kronecker {
    fn new(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut g = 2.0f64;
        for _ in 0..64 {
            g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
        let state = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self { alpha, state }
    }

    fn next(&mut self) -> &[f64] {
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s = (*s + a).fract();
        }
        &self.state
    }
}

fn disk_point(center: Point2<f64>, radius: f64, u: f64, v: f64) -> Point2<f64> {
    let (s, c) = (2.0 * std::f64::consts::PI * v).sin_cos();
    let r = radius * u.sqrt();
    Point2::new(center.x + r * c, center.y + r * s)
}

fn min_separation(z: &[Point2<f64>; 3]) -> f64 {
    z[0].dist(z[1]).min(z[0].dist(z[2])).min(z[1].dist(z[2]))
}

/// Objective evaluations allowed in one compass search.
pub const COMPASS_MAX_EVALS: u64 = 20_000;

/// Minimizes `objective` locally by compass search over the six coordinates of a triple.
fn compass_search<F, C>(start: [Point2<f64>; 3], start_value: f64, step0: f64, feasible: C, objective: F) -> ([Point2<f64>; 3], f64, u64)
where
    F: Fn(&[Point2<f64>; 3]) -> f64,
    C: Fn(&[Point2<f64>; 3]) -> bool,
{
    let mut best = start;
    let mut value = start_value;
    let mut step = step0;
    let mut evals = 0u64;
    while step > step0 * 1e-6 && evals < COMPASS_MAX_EVALS {
        let mut improved = false;
        for coord in 0..6 {
            for sign in [1.0, -1.0] {
                let mut trial = best;
                let p = &mut trial[coord / 2];
                if coord % 2 == 0 {
                    p.x += sign * step;
                } else {
                    p.y += sign * step;
                }
                if !feasible(&trial) {
                    continue;
                }
                evals += 1;
                let v = objective(&trial);
                if v < value {
                    best = trial;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, value, evals)
}

/// Fraction of the domain radius below which sampled points may not approach each other.
pub const SCAN_SEPARATION: f64 = 1e-2;

/// Minimum of p_t over triples in `domain`: quasi-random sampling followed by local refinement
/// of the best candidates. Triples closer than `SCAN_SEPARATION·radius` are not sampled.
pub fn sign_scan(t: f64, domain: Ball<f64>, n_samples: usize, seed: u64) -> Result<SignScanResult<f64>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sign scan needs at least one sample".into()));
    }
    let k = KernelParam::Finite(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = Kronecker::new(6, &mut rng);
    let sep = SCAN_SEPARATION * domain.radius;
    let feasible = |z: &[Point2<f64>; 3]| {
        min_separation(z) >= sep && z.iter().all(|p| p.dist(domain.center) <= domain.radius)
    };
    let objective = |z: &[Point2<f64>; 3]| perm_unchecked(k, z[0], z[1], z[2]);
    let mut pool: Vec<([Point2<f64>; 3], f64)> = Vec::new();
    let mut samples = 0u64;
    let mut drawn = 0usize;
    while drawn < n_samples {
        let u = seq.next().to_vec();
        drawn += 1;
        let z = [
            disk_point(domain.center, domain.radius, u[0], u[1]),
            disk_point(domain.center, domain.radius, u[2], u[3]),
            disk_point(domain.center, domain.radius, u[4], u[5]),
        ];
        if !feasible(&z) {
            continue;
        }
        samples += 1;
        pool.push((z, objective(&z)));
    }
    if pool.is_empty() {
        return Err(Error::NoAdmissibleSamples);
    }
    pool.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    pool.truncate(8);
    let mut best = pool[0];
    for &(z, v) in &pool {
        let (bz, bv, evals) = compass_search(z, v, 0.05 * domain.radius, feasible, objective);
        samples += evals;
        if bv < best.1 {
            best = (bz, bv);
        }
    }
    Ok(SignScanResult { t, min_value: objective(&best.0), argmin_triple: best.0, samples })
}

/// Smallest p_∞ admitted by the c₁ estimator.
pub const C1_MIN_PINF: f64 = 1e-9;

/// Empirical infimum of p₀/p_∞ over sampled triples in V_Far(θ) with p_∞ > 1e−9.
///
/// Half of the samples are uniform in the unit disc, the other half are squashed
/// towards horizontal or vertical configurations by a random anisotropic factor.
/// The result is an upper bound for the true constant.
pub fn estimate_c1(theta: f64, n_samples: usize, seed: u64) -> Result<C1Estimate> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = KernelParam::Finite(0.0);
    let kinf = KernelParam::Infinity;
    let admissible = |z: &[Point2<f64>; 3]| {
        min_separation(z) > 0.0
            && vertical_angle_sum(z[0], z[1], z[2]).map(|s| s >= theta).unwrap_or(false)
            && perm_unchecked(kinf, z[0], z[1], z[2]) > C1_MIN_PINF
    };
    let ratio = |z: &[Point2<f64>; 3]| perm_unchecked(k0, z[0], z[1], z[2]) / perm_unchecked(kinf, z[0], z[1], z[2]);
    let mut pool: Vec<([Point2<f64>; 3], f64)> = Vec::new();
    let mut count = 0u64;
    for s in 0..n_samples {
        let mut z = [0; 3].map(|_| disk_point(Point2::origin(), 1.0, rng.gen(), rng.gen()));
        if s % 2 == 1 {
            let squash = 10f64.powf(-3.0 * rng.gen::<f64>());
            let horizontal = rng.gen::<bool>();
            for p in &mut z {
                if horizontal {
                    p.y *= squash;
                } else {
                    p.x *= squash;
                }
            }
        }
        if !admissible(&z) {
            continue;
        }
        count += 1;
        pool.push((z, ratio(&z)));
    }
    if pool.is_empty() {
        return Err(Error::NoAdmissibleSamples);
    }
    let samples = n_samples as u64;
    pool.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    pool.truncate(4);
    let mut best = pool[0];
    let mut evals = 0;
    for &(z, v) in &pool {
        let step = 0.05 * min_separation(&z);
        let (bz, bv, e) = compass_search(z, v, step, admissible, ratio);
        evals += e;
        if bv < best.1 {
            best = (bz, bv);
        }
    }
    Ok(C1Estimate { theta, upper_bound: ratio(&best.0), witness: best.0, samples: samples + evals, admissible: count })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn pointwise_examples() {
        let (a, b, c) = (p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0));
        assert!((perm_pointwise(KernelParam::Infinity, a, b, c).unwrap() - 0.5).abs() < 1e-15);
        assert!((perm_pointwise(KernelParam::Finite(0.0), a, b, c).unwrap() - 0.25).abs() < 1e-15);
        for t in [-2.0, -0.5, 0.0, 3.0] {
            assert_eq!(perm_pointwise(KernelParam::Finite(t), a, b, p(2.0, 0.0)).unwrap(), 0.0);
        }
        assert_eq!(perm_pointwise(KernelParam::Infinity, a, a, b), Err(Error::CoincidentPoints));
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(menger_curvature(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)).unwrap(), 0.0);
        let on_circle = menger_curvature(p(1.0, 0.0), p(0.0, 1.0), p(-0.6, -0.8)).unwrap();
        assert!((on_circle - 1.0).abs() < 1e-14);
        let c = menger_curvature(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)).unwrap();
        assert!((c - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn window_rejects_bad_delta() {
        let m = DiscreteMeasure::<f64>::empty(1.0);
        assert!(perm_truncated_window(&m, &m, &m, 1.5, 1.0, Reduction::Sequential).is_err());
        assert!(perm_at_point(p(0.0, 0.0), &m, &m, 0.5, 0.0, Reduction::Sequential).is_err());
    }
}
