use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::corona::{Params, TreeDecomposition};
use crate::error::{Error, Result};
use crate::kernels::Line;
use crate::lattice::{CubeId, Lattice};
use crate::measure::Point2;
use crate::permutations::perm_truncated_window;
use crate::reduce::Reduction;

/// Grid points per window used as the finest dyadic resolution.
pub const WINDOW_SAMPLES: usize = 4096;
/// Accept a dyadic interval once ℓ(J) ≤ inf_J D / WHITNEY_RATIO.
pub const WHITNEY_RATIO: f64 = 20.0;
/// Radius of U₀ in units of diam(R).
pub const U0_RADIUS: f64 = 10.0;
/// Radius of the support bound in units of diam(R).
pub const SUPPORT_RADIUS: f64 = 12.0;

/// d and D for a family of cubes, stored per atom as (position, smallest diameter of a cube holding it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    pub sites: Vec<(Point2<f64>, f64)>,
}

impl DistanceField {
    pub fn new(lattice: &Lattice, cubes: &[CubeId]) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let mut best: Vec<Option<f64>> = vec![None; lattice.measure.len()];
        for &q in cubes {
            let c = lattice.cube(q);
            for &a in &c.members {
                best[a] = Some(best[a].map_or(c.diam, |d| d.min(c.diam)));
            }
        }
        let sites = best.iter().enumerate().filter_map(|(a, d)| d.map(|d| (lattice.measure.pos(a), d))).collect();
        Ok(Self { sites })
    }

    /// d(z) = min over cubes of dist(z, Q) + diam(Q).
    pub fn d(&self, z: Point2<f64>) -> f64 {
        self.sites.iter().map(|&(a, m)| z.dist(a) + m).fold(f64::INFINITY, f64::min)
    }

    /// D(u) = min over cubes of dist(u, Π(Q)) + diam(Q).
    pub fn big_d(&self, line: &Line<f64>, u: f64) -> f64 {
        self.big_d_on(line, u, u)
    }

    /// inf of D over the interval [lo, hi].
    pub fn big_d_on(&self, line: &Line<f64>, lo: f64, hi: f64) -> f64 {
        self.sites
            .iter()
            .map(|&(a, m)| {
                let p = line.project(a);
                (lo - p).max(p - hi).max(0.0) + m
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// d(z) over the given cubes.
pub fn d_function(lattice: &Lattice, cubes: &[CubeId], z: Point2<f64>) -> Result<f64> {
    Ok(DistanceField::new(lattice, cubes)?.d(z))
}

/// D(u) over the given cubes, for u an on-line coordinate of `line`.
pub fn big_d_function(lattice: &Lattice, cubes: &[CubeId], line: &Line<f64>, u: f64) -> Result<f64> {
    Ok(DistanceField::new(lattice, cubes)?.big_d(line, u))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyInterval {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub half: f64,
    /// A finest-grid cell that never met the Whitney condition.
    pub resolution: bool,
    pub in_i0: bool,
    pub inf_d: f64,
    /// A cube within factor 2 of the infimum defining D on the interval.
    pub cube: Option<CubeId>,
    /// F_i(u) = intercept + slope·(u − center).
    pub intercept: f64,
    pub slope: f64,
}

impl WhitneyInterval {
    pub fn length(&self) -> f64 {
        2.0 * self.half
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCover {
    pub line: Line<f64>,
    /// Π(x₀), the dyadic anchor.
    pub origin: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub min_length: f64,
    /// Whitney intervals and resolution cells, sorted by position.
    pub intervals: Vec<WhitneyInterval>,
    pub max_half: f64,
}

impl WhitneyCover {
    fn empty(line: Line<f64>, origin: f64) -> Self {
        Self { line, origin, window_lo: origin, window_hi: origin, min_length: 0.0, intervals: Vec::new(), max_half: 0.0 }
    }

    pub fn whitney(&self) -> impl Iterator<Item = &WhitneyInterval> {
        self.intervals.iter().filter(|j| !j.resolution)
    }

    /// Indices of the intervals whose 3J contains `u`.
    fn touching(&self, u: f64) -> Vec<usize> {
        if self.intervals.is_empty() {
            return Vec::new();
        }
        let k = self.intervals.partition_point(|j| j.hi() <= u).min(self.intervals.len() - 1);
        let mut out = Vec::new();
        let reach = 3.0 * self.max_half;
        let mut i = k as isize;
        while i >= 0 {
            let j = &self.intervals[i as usize];
            if j.hi() < u - reach {
                break;
            }
            if (u - j.center).abs() < 3.0 * j.half {
                out.push(i as usize);
            }
            i -= 1;
        }
        for (i, j) in self.intervals.iter().enumerate().skip(k + 1) {
            if j.lo() > u + reach {
                break;
            }
            if (u - j.center).abs() < 3.0 * j.half {
                out.push(i);
            }
        }
        out.sort_unstable();
        out
    }

    /// Neighbor length ratio max ℓ(J)/ℓ(J′) over adjacent Whitney intervals.
    pub fn neighbor_ratio(&self) -> f64 {
        self.intervals
            .windows(2)
            .filter(|w| !w[0].resolution && !w[1].resolution && w[0].hi == w[1].lo)
            .map(|w| (w[0].half / w[1].half).max(w[1].half / w[0].half))
            .fold(1.0, f64::max)
    }

    /// Whether the interiors are pairwise disjoint.
    pub fn disjoint(&self) -> bool {
        self.intervals.windows(2).all(|w| w[0].hi() <= w[1].lo())
    }
}

/// The C² plateau bump: 1 on 2J, 0 off 3J.
pub fn bump(center: f64, half: f64, u: f64) -> f64 {
    let t = (u - center).abs();
    if t <= 2.0 * half {
        1.0
    } else if t >= 3.0 * half {
        0.0
    } else {
        let s = (3.0 * half - t) / half;
        s * s * s * (10.0 + s * (6.0 * s - 15.0))
    }
}

/// Normalized partition-of-unity weights at `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnityWeights {
    pub weights: Vec<(usize, f64)>,
    /// `u` lies outside every 3J.
    pub uncovered: bool,
}

impl UnityWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w).sum()
    }
}

pub fn partition_of_unity(cover: &WhitneyCover, u: f64) -> UnityWeights {
    let idx = cover.touching(u);
    let raw: Vec<(usize, f64)> =
        idx.iter().map(|&i| (i, bump(cover.intervals[i].center, cover.intervals[i].half, u))).collect();
    let total: f64 = raw.iter().map(|&(_, w)| w).sum();
    if total == 0.0 {
        return UnityWeights { weights: Vec::new(), uncovered: true };
    }
    UnityWeights { weights: raw.into_iter().filter(|&(_, w)| w > 0.0).map(|(i, w)| (i, w / total)).collect(), uncovered: false }
}

/// The graph map (Π x, Π⊥ x) on G_R, extended piecewise linearly and tapered to 0 beyond its ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMap {
    /// (u, h, atom) sorted by u.
    pub nodes: Vec<(f64, f64, usize)>,
    pub taper: f64,
    /// Atoms of G_R dropped because another atom projects to the same point.
    pub collisions: Vec<usize>,
}

impl GraphMap {
    fn new(lattice: &Lattice, line: &Line<f64>, good: &[usize], taper: f64) -> Self {
        let m = &lattice.measure;
        let mut raw: Vec<(f64, f64, usize)> =
            good.iter().map(|&a| (line.project(m.pos(a)), line.offset(m.pos(a)), a)).collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let tol = 1e-12 * taper.max(f64::MIN_POSITIVE);
        let mut nodes: Vec<(f64, f64, usize)> = Vec::with_capacity(raw.len());
        let mut collisions = Vec::new();
        for n in raw {
            match nodes.last() {
                Some(last) if n.0 - last.0 <= tol => collisions.push(n.2),
                _ => nodes.push(n),
            }
        }
        Self { nodes, taper, collisions }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let (Some(first), Some(last)) = (self.nodes.first(), self.nodes.last()) else {
            return 0.0;
        };
        if u <= first.0 {
            return if u == first.0 { first.1 } else { first.1 * (1.0 - (first.0 - u) / self.taper).max(0.0) };
        }
        if u >= last.0 {
            return if u == last.0 { last.1 } else { last.1 * (1.0 - (u - last.0) / self.taper).max(0.0) };
        }
        let k = self.nodes.partition_point(|n| n.0 <= u);
        let (a, b) = (self.nodes[k - 1], self.nodes[k]);
        if u == a.0 {
            return a.1;
        }
        a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
    }
}

/// The Lipschitz function F on L_R and its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzGraph {
    pub root: CubeId,
    pub line: Line<f64>,
    pub x0: Option<usize>,
    pub diam_r: f64,
    pub r_root: f64,
    /// F ≡ 0 because R is itself a stopping cube or a single point.
    pub identically_zero: bool,
    pub graph_map: GraphMap,
    pub cover: WhitneyCover,
    pub lipschitz_estimate: f64,
    /// C_F·θ(R).
    pub lipschitz_reference: f64,
    /// max |u − Π(x₀)| over sampled u with F(u) ≠ 0.
    pub support_extent: f64,
    pub samples: usize,
}

/// Builds the Whitney cover for `tree` with anchor `origin` on `line`.
pub fn whitney_cover(lattice: &Lattice, tree: &TreeDecomposition, origin: f64) -> Result<WhitneyCover> {
    let line = tree.line;
    let diam_r = lattice.cube(tree.root).diam;
    if tree.root_stopped() || diam_r == 0.0 {
        return Ok(WhitneyCover::empty(line, origin));
    }
    let field = DistanceField::new(lattice, &tree.dbtree)?;
    let mut w = 1.0f64;
    while w < 16.0 * diam_r {
        w *= 2.0;
    }
    while w / 2.0 >= 16.0 * diam_r {
        w /= 2.0;
    }
    let min_length = 2.0 * w / WINDOW_SAMPLES as f64;
    let mut raw: Vec<(f64, f64, bool, f64)> = Vec::new();
    let mut stack = vec![(origin - w, origin + w)];
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        let inf = field.big_d_on(&line, lo, hi);
        if len <= inf / WHITNEY_RATIO {
            raw.push((lo, hi, false, inf));
        } else if len / 2.0 < min_length {
            raw.push((lo, hi, true, inf));
        } else {
            let mid = lo + len / 2.0;
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let u0 = U0_RADIUS * diam_r;
    let intervals: Vec<WhitneyInterval> = raw
        .into_iter()
        .map(|(lo, hi, resolution, inf_d)| {
            let center = lo + (hi - lo) / 2.0;
            let half = (hi - lo) / 2.0;
            let in_i0 = resolution || (lo < origin + u0 && hi > origin - u0);
            WhitneyInterval {
                lo,
                hi,
                center,
                half,
                resolution,
                in_i0,
                inf_d,
                cube: if in_i0 && !resolution { approximating_cube(lattice, &tree.dbtree, &line, lo, hi, inf_d) } else { None },
                intercept: 0.0,
                slope: 0.0,
            }
        })
        .collect();
    let max_half = intervals.iter().map(|j| j.half).fold(0.0, f64::max);
    Ok(WhitneyCover { line, origin, window_lo: origin - w, window_hi: origin + w, min_length, intervals, max_half })
}

/// The first cube in (level, id) order with dist(J, Π(Q)) + diam(Q) ≤ 2·inf_J D.
fn approximating_cube(lattice: &Lattice, cubes: &[CubeId], line: &Line<f64>, lo: f64, hi: f64, inf_d: f64) -> Option<CubeId> {
    let mut ordered = cubes.to_vec();
    ordered.sort_by_key(|&c| (lattice.cube(c).level, c));
    ordered.into_iter().find(|&q| {
        let c = lattice.cube(q);
        let dist = c
            .members
            .iter()
            .map(|&a| {
                let p = line.project(lattice.measure.pos(a));
                (lo - p).max(p - hi).max(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        dist + c.diam <= 2.0 * inf_d
    })
}

/// The atom of R closest to L_R, lowest index on ties.
fn anchor_atom(lattice: &Lattice, root: CubeId, line: &Line<f64>) -> usize {
    let m = &lattice.measure;
    let mut best = (f64::INFINITY, usize::MAX);
    for &a in &lattice.cube(root).members {
        let d = line.dist(m.pos(a));
        if d < best.0 {
            best = (d, a);
        }
    }
    best.1
}

/// Builds F = Σ_{i∈I₀} φ_i F_i over the Whitney cover of `tree`.
pub fn build_lipschitz_f(lattice: &Lattice, tree: &TreeDecomposition, params: &Params) -> Result<LipschitzGraph> {
    let r = lattice.cube(tree.root);
    let line = tree.line;
    let x0 = anchor_atom(lattice, tree.root, &line);
    let origin = line.project(lattice.measure.pos(x0));
    let identically_zero = tree.root_stopped() || r.diam == 0.0;
    let good: &[usize] = if identically_zero { &[] } else { &tree.good };
    let graph_map = GraphMap::new(lattice, &line, good, r.diam.max(f64::MIN_POSITIVE));
    let mut cover = whitney_cover(lattice, tree, origin)?;
    for j in cover.intervals.iter_mut().filter(|j| j.in_i0 && !j.resolution) {
        let (a, b) = (graph_map.eval(j.lo()), graph_map.eval(j.hi()));
        j.slope = (b - a) / j.length();
        j.intercept = a + j.slope * j.half;
    }
    let mut graph = LipschitzGraph {
        root: tree.root,
        line,
        x0: Some(x0),
        diam_r: r.diam,
        r_root: r.r,
        identically_zero,
        graph_map,
        cover,
        lipschitz_estimate: 0.0,
        lipschitz_reference: params.c_f * tree.slope.theta,
        support_extent: 0.0,
        samples: 0,
    };
    let pts = graph.sample_points();
    let vals: Vec<f64> = pts.par_iter().map(|&u| graph.eval(u)).collect();
    graph.samples = pts.len();
    graph.lipschitz_estimate = pts
        .windows(2)
        .zip(vals.windows(2))
        .map(|(u, f)| (f[1] - f[0]).abs() / (u[1] - u[0]))
        .fold(0.0, f64::max);
    graph.support_extent =
        pts.iter().zip(&vals).filter(|(_, &f)| f != 0.0).map(|(&u, _)| (u - origin).abs()).fold(0.0, f64::max);
    Ok(graph)
}

impl LipschitzGraph {
    pub fn origin(&self) -> f64 {
        self.cover.origin
    }

    /// F(u) for an on-line coordinate `u`.
    pub fn eval(&self, u: f64) -> f64 {
        if self.identically_zero || self.cover.intervals.is_empty() {
            return self.graph_map.eval(u);
        }
        let pu = partition_of_unity(&self.cover, u);
        if pu.uncovered {
            return 0.0;
        }
        if pu.weights.iter().all(|&(i, _)| self.cover.intervals[i].resolution) {
            return self.graph_map.eval(u);
        }
        let mut acc = 0.0;
        for &(i, w) in &pu.weights {
            let j = &self.cover.intervals[i];
            let fi = if j.resolution {
                self.graph_map.eval(u)
            } else if j.in_i0 {
                j.intercept + j.slope * (u - j.center)
            } else {
                0.0
            };
            acc += w * fi;
        }
        acc
    }

    /// The point of Γ_R above `u`.
    pub fn point(&self, u: f64) -> Point2<f64> {
        self.line.point_at(u, self.eval(u))
    }

    /// Grid of the window plus every node and interval endpoint, sorted and deduplicated.
    pub fn sample_points(&self) -> Vec<f64> {
        let (lo, hi) = if self.cover.intervals.is_empty() {
            let ext = SUPPORT_RADIUS * self.diam_r.max(f64::MIN_POSITIVE);
            (self.origin() - ext, self.origin() + ext)
        } else {
            (self.cover.window_lo, self.cover.window_hi)
        };
        let n = 2 * WINDOW_SAMPLES;
        let mut pts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        pts.extend(self.graph_map.nodes.iter().map(|n| n.0));
        for j in &self.cover.intervals {
            pts.extend([j.lo(), j.hi(), j.center - 2.0 * j.half, j.center + 2.0 * j.half]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Evenly spaced (u, F(u)) pairs over the window.
    pub fn curve(&self, n: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = if self.cover.intervals.is_empty() {
            let ext = SUPPORT_RADIUS * self.diam_r.max(f64::MIN_POSITIVE);
            (self.origin() - ext, self.origin() + ext)
        } else {
            (self.cover.window_lo, self.cover.window_hi)
        };
        let n = n.max(2);
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).map(|u| (u, self.eval(u))).collect()
    }

    /// min and max of D/ℓ over 31 points of each 15J, Whitney intervals only.
    pub fn whitney_bounds(&self, lattice: &Lattice, tree: &TreeDecomposition) -> Result<(f64, f64)> {
        if self.cover.whitney().next().is_none() {
            return Ok((f64::INFINITY, 0.0));
        }
        let field = DistanceField::new(lattice, &tree.dbtree)?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for j in self.cover.whitney() {
            let ell = j.length();
            for k in 0..=30 {
                let z = j.center - 7.5 * ell + 15.0 * ell * k as f64 / 30.0;
                let ratio = field.big_d(&self.line, z) / ell;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        Ok((lo, hi))
    }

    /// max |Σφ_i − 1| over the covered sample points.
    pub fn unity_defect(&self) -> f64 {
        self.sample_points()
            .iter()
            .map(|&u| partition_of_unity(&self.cover, u))
            .filter(|pu| !pu.uncovered)
            .map(|pu| (pu.total() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max ℓ(J_i)·|φ_i′| by central differences at the sample points.
    pub fn bump_derivative_constant(&self) -> f64 {
        let weight = |idx: usize, v: f64| {
            partition_of_unity(&self.cover, v).weights.iter().find(|&&(i, _)| i == idx).map_or(0.0, |&(_, w)| w)
        };
        let mut worst: f64 = 0.0;
        for (idx, j) in self.cover.intervals.iter().enumerate() {
            let h = 1e-4 * j.half;
            for k in 0..=40 {
                let u = j.center - 3.0 * j.half + 6.0 * j.half * k as f64 / 40.0;
                if u - h < self.cover.window_lo || u + h > self.cover.window_hi {
                    continue;
                }
                let d = (weight(idx, u + h) - weight(idx, u - h)) / (2.0 * h);
                worst = worst.max(d.abs() * j.length());
            }
        }
        worst
    }

    /// max |F(Π x) − Π⊥ x| over the atoms of G_R kept as nodes.
    pub fn node_defect(&self) -> f64 {
        self.graph_map.nodes.iter().map(|&(u, h, _)| (self.eval(u) - h).abs()).fold(0.0, f64::max)
    }

    pub fn checks(&self, lattice: &Lattice, tree: &TreeDecomposition) -> Result<Vec<Check>> {
        let tag = |s: &str| format!("graph[{}].{}", self.root, s);
        let (lo, hi) = self.whitney_bounds(lattice, tree)?;
        let mut out = vec![
            Check::holds(tag("intervals_disjoint"), self.cover.disjoint()),
            Check::le(tag("unity_defect"), self.unity_defect(), 1e-12),
            Check::le(tag("support_extent"), self.support_extent, SUPPORT_RADIUS * self.diam_r),
            Check::eq(tag("graph_map_on_good_set"), self.node_defect(), 0.0),
        ];
        if lo.is_finite() {
            out.push(Check::ge(tag("whitney_lower"), lo, 5.0));
            out.push(Check::le(tag("whitney_upper"), hi, 50.0));
            out.push(Check::le(tag("neighbor_ratio"), self.cover.neighbor_ratio(), 10.0));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRecord {
    pub atom: usize,
    pub dist_graph: f64,
    pub d: f64,
    /// dist_graph/d, with 0/0 read as 0.
    pub ratio: f64,
    pub good: bool,
    pub far: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub records: Vec<ClosenessRecord>,
    pub max_ratio: f64,
    /// Over atoms of R outside R_Far.
    pub max_ratio_near: f64,
    /// max over sampled z ∈ Γ_R of dist(z, L_R)/r(R).
    pub max_line_offset: f64,
}

/// Distance from the point with frame coordinates (s, h) to Γ_R.
fn dist_to_graph(graph: &LipschitzGraph, s: f64, h: f64) -> f64 {
    let r0 = (h - graph.eval(s)).abs();
    if r0 == 0.0 {
        return 0.0;
    }
    let n = 64;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|k| s - r0 + 2.0 * r0 * k as f64 / n as f64)
        .map(|u| (u, graph.eval(u)))
        .collect();
    let p = Point2::new(s, h);
    let mut best = r0;
    for w in pts.windows(2) {
        let (a, b) = (Point2::new(w[0].0, w[0].1), Point2::new(w[1].0, w[1].1));
        let ab = b - a;
        let t = ((p - a).dot(ab) / ab.norm_sqr()).clamp(0.0, 1.0);
        best = best.min(p.dist(a + ab * t));
    }
    best
}

/// dist(x, Γ_R) against d(x) for atoms within 10·diam(R) of x₀, and the offset of Γ_R from L_R.
pub fn graph_closeness_report(lattice: &Lattice, graph: &LipschitzGraph, tree: &TreeDecomposition) -> Result<ClosenessReport> {
    let m = &lattice.measure;
    let field = if tree.dbtree.is_empty() { None } else { Some(DistanceField::new(lattice, &tree.dbtree)?) };
    let x0 = m.pos(graph.x0.unwrap_or(0));
    let radius = U0_RADIUS * graph.diam_r;
    let atoms: Vec<usize> = (0..m.len()).filter(|&a| m.pos(a).dist(x0) <= radius).collect();
    let records: Vec<ClosenessRecord> = atoms
        .par_iter()
        .map(|&a| {
            let p = m.pos(a);
            let dist_graph = dist_to_graph(graph, graph.line.project(p), graph.line.offset(p));
            let d = field.as_ref().map_or(f64::INFINITY, |f| f.d(p));
            let ratio = if dist_graph == 0.0 { 0.0 } else { dist_graph / d };
            ClosenessRecord {
                atom: a,
                dist_graph,
                d,
                ratio,
                good: tree.good.binary_search(&a).is_ok(),
                far: tree.far.binary_search(&a).is_ok(),
            }
        })
        .collect();
    let in_root = |a: usize| lattice.cube(tree.root).members.binary_search(&a).is_ok();
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_ratio_near = records.iter().filter(|r| in_root(r.atom) && !r.far).map(|r| r.ratio).fold(0.0, f64::max);
    let max_line_offset = graph.curve(2048).iter().map(|&(_, f)| f.abs() / graph.r_root).fold(0.0, f64::max);
    Ok(ClosenessReport { records, max_ratio, max_ratio_near, max_line_offset })
}

/// β²Θ − 4ε²Θ² against p₀^{[δ,Q]}(μ⌊2B_Q)/μ(Q) on balanced cubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPermRecord {
    pub cube: CubeId,
    pub lhs: f64,
    pub flat_term: f64,
    pub perm_term: f64,
    /// (lhs − flat_term)/perm_term when positive, else 0.
    pub fitted_constant: f64,
}

pub fn beta_perm_records(lattice: &Lattice, cubes: &[CubeId], params: &Params, reduction: Reduction) -> Result<Vec<BetaPermRecord>> {
    cubes
        .iter()
        .map(|&q| {
            let c = lattice.cube(q);
            let theta = c.theta_2b();
            let lhs = c.beta.beta_sq * theta;
            let flat_term = 4.0 * params.eps0 * params.eps0 * theta * theta;
            let local = lattice.measure.restrict(&c.two_b());
            let p = perm_truncated_window(&local, &local, &local, params.delta, c.r, reduction)?.value;
            let perm_term = p / c.mass;
            let excess = lhs - flat_term;
            let fitted_constant = if excess <= 0.0 {
                0.0
            } else if perm_term > 0.0 {
                excess / perm_term
            } else {
                f64::INFINITY
            };
            Ok(BetaPermRecord { cube: q, lhs, flat_term, perm_term, fitted_constant })
        })
        .collect()
}
