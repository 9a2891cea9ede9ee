//! A David–Mattila-style hierarchy of cells on a finite measure.
//!
//! Level `k` cells have radius `r = unit·A₀⁻ᵏ`, where `unit` is the diameter of the support.
//! Each parent cell is split by a greedy farthest-point net of its members at separation
//! `r`, seeded with the parent's center; members join their nearest net point. Levels are
//! added until every cell is a single atom.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphfit::{beta2, BetaResult};
use crate::measure::{Ball, DiscreteMeasure, Point2};
use crate::reduce::Compensated;

/// Ratio of the big ball B_Q to B(Q).
pub const BIG_BALL: f64 = 28.0;
/// Ratio of 2B_Q to B(Q).
pub const TWO_BIG_BALL: f64 = 56.0;
/// Ratio of the doubling test ball to B(Q).
pub const DOUBLING_BALL: f64 = 100.0;
/// Ratio of the sibling separation ball to B(Q).
pub const SEPARATION_BALL: f64 = 5.0;
/// Ratio of the small-boundary reference ball to B(Q).
pub const BOUNDARY_BALL: f64 = 90.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub c0: f64,
    pub a0: f64,
    /// Deepest level to build; `None` refines until every cell is a singleton.
    pub k_max: Option<usize>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { c0: 2.0, a0: 8.0, k_max: None }
    }
}

pub type CubeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub id: CubeId,
    pub level: usize,
    pub center_atom: usize,
    pub center: Point2<f64>,
    pub r: f64,
    /// Sorted atom indices.
    pub members: Vec<usize>,
    pub parent: Option<CubeId>,
    pub children: Vec<CubeId>,
    pub doubling: bool,
    pub leaf: bool,
    pub diam: f64,
    /// μ(Q).
    pub mass: f64,
    /// μ(B(Q)).
    pub mass_ball: f64,
    /// μ(2B_Q).
    pub mass_2b: f64,
    /// μ(100B(Q)).
    pub mass_100b: f64,
    /// β₂ and the best line on 2B_Q.
    pub beta: BetaResult<f64>,
}

impl Cube {
    pub fn ball(&self) -> Ball<f64> {
        Ball::new(self.center, self.r)
    }

    /// B_Q = 28·B(Q).
    pub fn big_ball(&self) -> Ball<f64> {
        Ball::new(self.center, BIG_BALL * self.r)
    }

    /// 2B_Q = 56·B(Q).
    pub fn two_b(&self) -> Ball<f64> {
        Ball::new(self.center, TWO_BIG_BALL * self.r)
    }

    /// Θ_μ(2B_Q).
    pub fn theta_2b(&self) -> f64 {
        self.mass_2b / (TWO_BIG_BALL * self.r)
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

/// Diagnostics of the construction against the four lattice properties.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub cubes_per_level: Vec<usize>,
    pub sibling_pairs: usize,
    /// Sibling pairs whose 5B balls intersect.
    pub separation_violations: Vec<(CubeId, CubeId)>,
    /// Cubes with a member outside 28·B(Q).
    pub containment_violations: Vec<CubeId>,
    /// Cubes whose ball B(Q) contains atoms of other cubes.
    pub ball_leaks: Vec<CubeId>,
    pub radius_sandwich_holds: bool,
    pub leaf_level: usize,
}

impl BuildReport {
    /// Fraction of sibling pairs whose 5B balls are disjoint.
    pub fn separation_fraction(&self) -> f64 {
        if self.sibling_pairs == 0 {
            1.0
        } else {
            1.0 - self.separation_violations.len() as f64 / self.sibling_pairs as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub config: LatticeConfig,
    /// Length unit: the diameter of the support (1 for a single atom).
    pub unit: f64,
    pub measure: DiscreteMeasure<f64>,
    pub cubes: Vec<Cube>,
    pub levels: Vec<Vec<CubeId>>,
    pub report: BuildReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalDoubling {
    pub cubes: Vec<CubeId>,
    /// μ(∪ cubes)/μ(Q).
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncestorReport {
    pub cube: CubeId,
    /// diam(ancestor)/diam(Q); `None` when Q is a single point.
    pub diam_ratio: Option<f64>,
    pub generations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Cubes from Q up to P.
    pub chain: Vec<CubeId>,
    /// Θ_μ(100B(S)) along the chain.
    pub densities: Vec<f64>,
    /// Σ Θ_μ(100B(S)) / Θ_μ(100B(P)).
    pub ratio: f64,
    /// μ(100B(Q)) ≤ A₀^{−20(J(Q)−J(P)−1)} μ(100B(P)).
    pub decay_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub cube: CubeId,
    pub l: usize,
    pub collar: f64,
    pub ext_mass: f64,
    pub int_mass: f64,
    /// (C⁻¹C₀⁻⁷A₀)^{−l}·μ(90B(Q)) with C = 1; reference only.
    pub rhs: f64,
    pub below_resolution: bool,
    pub passes: bool,
}

fn mass_in(m: &DiscreteMeasure<f64>, ball: &Ball<f64>) -> f64 {
    m.mass_in(ball)
}

fn members_mass(m: &DiscreteMeasure<f64>, members: &[usize]) -> f64 {
    let mut acc = Compensated::new();
    for &i in members {
        acc.add(m.weight(i));
    }
    acc.value()
}

fn set_diam(m: &DiscreteMeasure<f64>, members: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            d = d.max(m.pos(i).dist(m.pos(j)));
        }
    }
    d
}

/// Greedy farthest-point net of `members` at separation `rho`, seeded with `seed`.
fn farthest_point_net(m: &DiscreteMeasure<f64>, members: &[usize], seed: usize, rho: f64) -> Vec<usize> {
    let mut net = vec![seed];
    let mut dist: Vec<f64> = members.iter().map(|&i| m.pos(i).dist(m.pos(seed))).collect();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (a, &i) in members.iter().enumerate() {
            if best.map_or(true, |(d, _)| dist[a] > d) {
                best = Some((dist[a], i));
            }
        }
        match best {
            Some((d, i)) if d >= rho => {
                net.push(i);
                let p = m.pos(i);
                for (a, &j) in members.iter().enumerate() {
                    dist[a] = dist[a].min(m.pos(j).dist(p));
                }
            }
            _ => return net,
        }
    }
}

impl Lattice {
    /// Builds the hierarchy on `m`.
    pub fn build(m: &DiscreteMeasure<f64>, config: LatticeConfig) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if !(config.c0 > 1.0 && config.a0 > config.c0) {
            return Err(Error::InvalidParameter(format!("need A0 > C0 > 1, got A0 = {}, C0 = {}", config.a0, config.c0)));
        }
        let diam = m.diam();
        let unit = if diam > 0.0 { diam } else { 1.0 };
        if let Some(k) = config.k_max {
            if unit * config.a0.powi(-(k as i32)) < m.scale() {
                return Err(Error::LatticeTooDeep(k));
            }
        }
        let n = m.len();
        let root_center = (0..n)
            .map(|i| (i, (0..n).map(|j| m.pos(i).dist(m.pos(j))).fold(0.0, f64::max)))
            .fold((0, f64::INFINITY), |best, (i, e)| if e < best.1 { (i, e) } else { best })
            .0;
        let mut shells: Vec<(usize, usize, f64, Vec<usize>, Option<usize>)> =
            vec![(0, root_center, unit, (0..n).collect(), None)];
        let mut levels = vec![vec![0]];
        let mut children: Vec<Vec<usize>> = vec![Vec::new()];
        let mut k = 0;
        loop {
            let all_single = levels[k].iter().all(|&c| shells[c].3.len() == 1);
            let stop = match config.k_max {
                Some(kmax) => k >= kmax,
                None => all_single,
            };
            if stop {
                break;
            }
            let rho = unit * config.a0.powi(-(k as i32 + 1));
            let mut next = Vec::new();
            for &pid in &levels[k].clone() {
                let (_, seed, _, members, _) = shells[pid].clone();
                let net = farthest_point_net(m, &members, seed, rho);
                let mut ordered = net.clone();
                ordered.sort_unstable();
                let mut groups: Vec<Vec<usize>> = vec![Vec::new(); net.len()];
                for &i in &members {
                    let mut best = (f64::INFINITY, usize::MAX);
                    for &c in &ordered {
                        let d = m.pos(i).dist(m.pos(c));
                        if d < best.0 {
                            best = (d, c);
                        }
                    }
                    let slot = net.iter().position(|&c| c == best.1).unwrap();
                    groups[slot].push(i);
                }
                for (c, g) in net.into_iter().zip(groups) {
                    let id = shells.len();
                    shells.push((k + 1, c, rho, g, Some(pid)));
                    children.push(Vec::new());
                    children[pid].push(id);
                    next.push(id);
                }
            }
            levels.push(next);
            k += 1;
        }
        let leaf_level = k;
        let cubes: Vec<Cube> = shells
            .into_par_iter()
            .enumerate()
            .map(|(id, (level, center_atom, r, members, parent))| {
                let center = m.pos(center_atom);
                let leaf = children[id].is_empty();
                let mass_ball = mass_in(m, &Ball::new(center, r));
                let mass_100b = mass_in(m, &Ball::new(center, DOUBLING_BALL * r));
                let doubling = (leaf && members.len() == 1) || mass_100b <= config.c0 * mass_ball;
                let two_b = Ball::new(center, TWO_BIG_BALL * r);
                Cube {
                    id,
                    level,
                    center_atom,
                    center,
                    r,
                    diam: set_diam(m, &members),
                    mass: members_mass(m, &members),
                    members,
                    parent,
                    children: children[id].clone(),
                    doubling,
                    leaf,
                    mass_ball,
                    mass_2b: mass_in(m, &two_b),
                    mass_100b,
                    beta: beta2(m, &two_b),
                }
            })
            .collect();
        let mut lattice = Self { config, unit, measure: m.clone(), cubes, levels, report: BuildReport::default() };
        lattice.report = lattice.diagnose(leaf_level);
        Ok(lattice)
    }

    fn diagnose(&self, leaf_level: usize) -> BuildReport {
        let m = &self.measure;
        let mut report = BuildReport {
            cubes_per_level: self.levels.iter().map(Vec::len).collect(),
            radius_sandwich_holds: true,
            leaf_level,
            ..Default::default()
        };
        let mut owner = vec![0usize; m.len()];
        for level in &self.levels {
            for &c in level {
                for &i in &self.cubes[c].members {
                    owner[i] = c;
                }
            }
            for &c in level {
                let q = &self.cubes[c];
                let k = q.level as i32;
                let lo = self.unit * self.config.a0.powi(-k);
                if !(q.r >= lo * (1.0 - 1e-12) && q.r <= self.config.c0 * lo * (1.0 + 1e-12)) {
                    report.radius_sandwich_holds = false;
                }
                if q.members.iter().any(|&i| m.pos(i).dist(q.center) >= BIG_BALL * q.r) {
                    report.containment_violations.push(c);
                }
                if (0..m.len()).any(|i| owner[i] != c && q.ball().contains(m.pos(i))) {
                    report.ball_leaks.push(c);
                }
            }
        }
        for q in &self.cubes {
            for (a, &s) in q.children.iter().enumerate() {
                for &t in &q.children[a + 1..] {
                    report.sibling_pairs += 1;
                    let (x, y) = (&self.cubes[s], &self.cubes[t]);
                    if x.center.dist(y.center) < SEPARATION_BALL * (x.r + y.r) {
                        report.separation_violations.push((s, t));
                    }
                }
            }
        }
        report
    }

    pub fn root(&self) -> CubeId {
        0
    }

    pub fn cube(&self, id: CubeId) -> &Cube {
        &self.cubes[id]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Ancestors of `q` from its parent up to the root.
    pub fn ancestors(&self, q: CubeId) -> Vec<CubeId> {
        let mut out = Vec::new();
        let mut cur = self.cubes[q].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.cubes[p].parent;
        }
        out
    }

    /// Whether `q ⊆ p` (equivalently, `p` is `q` or one of its ancestors).
    pub fn is_within(&self, q: CubeId, p: CubeId) -> bool {
        let mut cur = Some(q);
        while let Some(c) = cur {
            if c == p {
                return true;
            }
            if self.cubes[c].level <= self.cubes[p].level {
                return false;
            }
            cur = self.cubes[c].parent;
        }
        false
    }

    /// All cubes contained in `q`, including `q`, in (level, id) order.
    pub fn descendants(&self, q: CubeId) -> Vec<CubeId> {
        let mut out = vec![q];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.cubes[out[i]].children.iter().copied());
            i += 1;
        }
        out.sort_by_key(|&c| (self.cubes[c].level, c));
        out
    }

    /// Mass of the union of a family of disjoint cubes.
    pub fn family_mass(&self, family: &[CubeId]) -> f64 {
        let mut acc = Compensated::new();
        for &c in family {
            acc.add(self.cubes[c].mass);
        }
        acc.value()
    }

    /// μ(100B(Q)) ≤ C₀·μ(B(Q)); leaf singletons are doubling by convention.
    pub fn doubling_check(&self, q: CubeId) -> bool {
        self.cubes[q].doubling
    }

    /// The maximal doubling cubes contained in `q`.
    pub fn maximal_doubling(&self, q: CubeId) -> MaximalDoubling {
        let mut out = Vec::new();
        let mut stack = vec![q];
        while let Some(c) = stack.pop() {
            if self.cubes[c].doubling {
                out.push(c);
            } else {
                stack.extend(self.cubes[c].children.iter().rev().copied());
            }
        }
        out.sort_by_key(|&c| (self.cubes[c].level, c));
        let coverage = if self.cubes[q].mass > 0.0 { self.family_mass(&out) / self.cubes[q].mass } else { 1.0 };
        MaximalDoubling { cubes: out, coverage }
    }

    /// The smallest doubling cube containing `q`.
    pub fn first_doubling_ancestor(&self, q: CubeId) -> Result<AncestorReport> {
        if !self.cubes[self.root()].doubling {
            return Err(Error::NoDoublingAncestor(q));
        }
        let mut cur = q;
        let mut generations = 0;
        loop {
            if self.cubes[cur].doubling {
                let dq = self.cubes[q].diam;
                let diam_ratio = if dq > 0.0 { Some(self.cubes[cur].diam / dq) } else { None };
                return Ok(AncestorReport { cube: cur, diam_ratio, generations });
            }
            match self.cubes[cur].parent {
                Some(p) => {
                    cur = p;
                    generations += 1;
                }
                None => return Err(Error::NoDoublingAncestor(q)),
            }
        }
    }

    /// Θ_μ(100B(S)) for the cubes `S` with Q ⊆ S ⊆ P; the cubes strictly between must be non-doubling.
    pub fn density_chain_report(&self, q: CubeId, p: CubeId) -> Result<ChainReport> {
        if !self.is_within(q, p) {
            return Err(Error::Precondition(format!("cube {q} is not contained in cube {p}")));
        }
        let mut chain = vec![q];
        let mut cur = q;
        while cur != p {
            cur = self.cubes[cur].parent.expect("ancestor chain reaches p");
            chain.push(cur);
        }
        if let Some(&bad) = chain[1..chain.len().saturating_sub(1)].iter().find(|&&s| self.cubes[s].doubling) {
            return Err(Error::Precondition(format!("intermediate cube {bad} is doubling")));
        }
        let theta = |s: CubeId| self.cubes[s].mass_100b / (DOUBLING_BALL * self.cubes[s].r);
        let densities: Vec<f64> = chain.iter().map(|&s| theta(s)).collect();
        let top = theta(p);
        let mut acc = Compensated::new();
        for &d in &densities {
            acc.add(d);
        }
        let ratio = if top > 0.0 { acc.value() / top } else { f64::INFINITY };
        let gap = self.cubes[q].level as f64 - self.cubes[p].level as f64 - 1.0;
        let decay_bound_holds = self.cubes[q].mass_100b <= self.config.a0.powf(-20.0 * gap) * self.cubes[p].mass_100b;
        Ok(ChainReport { chain, densities, ratio, decay_bound_holds })
    }

    /// Masses of the exterior and interior boundary collars of width `unit·A₀^{−k−l}`.
    pub fn small_boundary_report(&self, q: CubeId, l: usize) -> BoundaryReport {
        let m = &self.measure;
        let cube = &self.cubes[q];
        let collar = self.unit * self.config.a0.powi(-((cube.level + l) as i32));
        let inside: std::collections::HashSet<usize> = cube.members.iter().copied().collect();
        let dist_to = |p: Point2<f64>, set: &mut dyn Iterator<Item = usize>| set.map(|j| p.dist(m.pos(j))).fold(f64::INFINITY, f64::min);
        let mut ext = Compensated::new();
        let mut int = Compensated::new();
        for i in 0..m.len() {
            if inside.contains(&i) {
                let d = dist_to(m.pos(i), &mut (0..m.len()).filter(|j| !inside.contains(j)));
                if d < collar {
                    int.add(m.weight(i));
                }
            } else {
                let d = dist_to(m.pos(i), &mut cube.members.iter().copied());
                if d < collar {
                    ext.add(m.weight(i));
                }
            }
        }
        let factor = self.config.c0.powi(-7) * self.config.a0;
        let rhs = factor.powi(-(l as i32)) * m.mass_in(&cube.ball().scaled(BOUNDARY_BALL));
        let (ext_mass, int_mass) = (ext.value(), int.value());
        BoundaryReport {
            cube: q,
            l,
            collar,
            ext_mass,
            int_mass,
            rhs,
            below_resolution: collar < m.scale(),
            passes: ext_mass + int_mass <= rhs,
        }
    }

    /// δ_μ(Q, Q̃) = Σ over atoms y in 2B_Q̃ \ 2B_Q of w(y)/|y − z_Q|.
    pub fn delta_mu(&self, q: CubeId, q_tilde: CubeId) -> Result<f64> {
        if !self.is_within(q, q_tilde) {
            return Err(Error::Precondition(format!("cube {q} is not contained in cube {q_tilde}")));
        }
        let (inner, outer) = (self.cubes[q].two_b(), self.cubes[q_tilde].two_b());
        let mut acc = Compensated::new();
        for a in self.measure.atoms() {
            if outer.contains(a.pos) && !inner.contains(a.pos) {
                acc.add(a.weight / a.pos.dist(self.cubes[q].center));
            }
        }
        Ok(acc.value())
    }

    /// The stable JSON dump.
    pub fn dump(&self) -> LatticeDump {
        LatticeDump {
            c0: self.config.c0,
            a0: self.config.a0,
            unit: self.unit,
            cubes: self
                .cubes
                .iter()
                .map(|q| CubeRecord {
                    id: q.id,
                    level: q.level,
                    center: q.center,
                    r: q.r,
                    members: q.members.clone(),
                    doubling: q.doubling,
                    parent: q.parent,
                    children: q.children.clone(),
                    leaf: q.leaf,
                })
                .collect(),
            report: self.report.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeRecord {
    pub id: CubeId,
    pub level: usize,
    pub center: Point2<f64>,
    pub r: f64,
    pub members: Vec<usize>,
    pub doubling: bool,
    pub parent: Option<CubeId>,
    pub children: Vec<CubeId>,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDump {
    pub c0: f64,
    pub a0: f64,
    pub unit: f64,
    pub cubes: Vec<CubeRecord>,
    pub report: BuildReport,
}
