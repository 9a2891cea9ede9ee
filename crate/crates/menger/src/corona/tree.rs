use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{Params, SlopeRule};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::graphfit::{balanced_ball_test, maximal_doubling_below, BalanceVerdict};
use crate::kernels::{angle_between, KernelParam, Line};
use crate::lattice::{CubeId, Lattice, BIG_BALL};
use crate::permutations::perm_unchecked;
use crate::reduce::Compensated;

/// Stopping labels, in scan priority order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Hd,
    Ld,
    Ub,
    Bp,
    Bs,
    F,
    None,
}

impl Label {
    pub fn is_stop(self) -> bool {
        self != Label::None
    }

    /// Labels decided before the far-from-lines test.
    pub fn is_early(self) -> bool {
        matches!(self, Label::Hd | Label::Ld | Label::Ub | Label::Bp | Label::Bs)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hd => "HD",
            Label::Ld => "LD",
            Label::Ub => "UB",
            Label::Bp => "BP",
            Label::Bs => "BS",
            Label::F => "F",
            Label::None => "none",
        }
    }
}

/// The outcome of the stopping scan on one cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopVerdict {
    pub cube: CubeId,
    pub level: usize,
    pub label: Label,
    /// The quantity that triggered the label: Θ ratio for HD/LD, the dense-family ratio for UB,
    /// the accumulated perm² for BP, the angle for BS, the far fraction for F.
    pub evidence: f64,
    /// Leaves are never tested.
    pub tested: bool,
    /// Θ(2B_Q)/Θ(2B_R).
    pub density_ratio: f64,
    /// p₀^{[δ,Q]}(μ⌊2B_Q, μ⌊2B_R, μ⌊2B_R).
    pub window_perm: f64,
    /// perm(Q)² = window_perm/(Θ_R²μ(Q)).
    pub perm_sq: f64,
    /// Σ perm(Q̃)² over Q ⊆ Q̃ ⊆ R.
    pub chain_perm_sq: f64,
}

/// The sources of Next(R).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NextParts {
    pub hd: Vec<CubeId>,
    /// Maximal doubling cubes below UB cubes that are denser than their UB parent.
    pub ub_dense: Vec<CubeId>,
    /// The remaining maximal doubling cubes below UB cubes.
    pub ub_sparse: Vec<CubeId>,
    /// Maximal doubling cubes below the sons of LD, BP and F cubes.
    pub other: Vec<CubeId>,
    pub bs: Vec<CubeId>,
}

impl NextParts {
    pub fn ub_tilde(&self) -> Vec<CubeId> {
        let mut v: Vec<CubeId> = self.ub_dense.iter().chain(&self.ub_sparse).copied().collect();
        v.sort_unstable();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub root: CubeId,
    pub root_level: usize,
    /// Θ(2B_R).
    pub theta_root: f64,
    /// L_R.
    pub line: Line<f64>,
    pub slope: SlopeRule,
    /// Every examined cube in (level, id) order with its verdict.
    pub verdicts: Vec<StopVerdict>,
    pub tree: Vec<CubeId>,
    pub stop: Vec<CubeId>,
    pub dbtree: Vec<CubeId>,
    /// Atoms of R outside every stopping cube.
    pub good: Vec<usize>,
    /// Atoms of R with a large pointwise permutation at some unstopped scale.
    pub far: Vec<usize>,
    pub next: Vec<CubeId>,
    pub next_parts: NextParts,
}

/// Rows T_x[y] = w_y Σ_z p₀(x, y, z) w_z over the atoms y, z of 2B_R.
struct PermRows<'a> {
    lattice: &'a Lattice,
    ring: Vec<usize>,
    rows: Vec<Option<Vec<f64>>>,
}

impl<'a> PermRows<'a> {
    fn new(lattice: &'a Lattice, root: CubeId) -> Self {
        let ring = lattice.measure.indices_in(&lattice.cube(root).two_b());
        Self { lattice, ring, rows: vec![None; lattice.measure.len()] }
    }

    fn ensure(&mut self, atoms: &[usize]) {
        let missing: Vec<usize> = atoms.iter().copied().filter(|&x| self.rows[x].is_none()).collect();
        let m = &self.lattice.measure;
        let ring = &self.ring;
        let k = KernelParam::Finite(0.0);
        let computed: Vec<(usize, Vec<f64>)> = missing
            .par_iter()
            .map(|&x| {
                let px = m.pos(x);
                let row = ring
                    .iter()
                    .map(|&y| {
                        if y == x {
                            return 0.0;
                        }
                        let py = m.pos(y);
                        let mut acc = Compensated::new();
                        for &z in ring {
                            if z != x && z != y {
                                acc.add(perm_unchecked(k, px, py, m.pos(z)) * m.weight(z));
                            }
                        }
                        m.weight(y) * acc.value()
                    })
                    .collect();
                (x, row)
            })
            .collect();
        for (x, row) in computed {
            self.rows[x] = Some(row);
        }
    }

    /// Σ_y T_x[y] over δr ≤ |x − y| ≤ r/δ.
    fn at_point(&self, x: usize, delta: f64, r: f64) -> f64 {
        let m = &self.lattice.measure;
        let row = self.rows[x].as_ref().expect("row computed");
        let (lo, hi) = (delta * r, r / delta);
        let px = m.pos(x);
        let mut acc = Compensated::new();
        for (k, &y) in self.ring.iter().enumerate() {
            let d = px.dist(m.pos(y));
            if y != x && d >= lo && d <= hi {
                acc.add(row[k]);
            }
        }
        acc.value()
    }

    fn window_perm(&mut self, q: CubeId, delta: f64) -> f64 {
        let atoms = self.lattice.measure.indices_in(&self.lattice.cube(q).two_b());
        self.ensure(&atoms);
        let r = self.lattice.cube(q).r;
        let mut acc = Compensated::new();
        for &x in &atoms {
            acc.add(self.lattice.measure.weight(x) * self.at_point(x, delta, r));
        }
        acc.value()
    }
}

/// The cubes that may serve as Q̃ in the far-from-lines test for `q`.
fn line_candidates(
    lattice: &Lattice,
    root: CubeId,
    q: CubeId,
    by_level: &BTreeMap<usize, Vec<CubeId>>,
    labels: &BTreeMap<CubeId, Label>,
) -> Vec<CubeId> {
    let cq = lattice.cube(q);
    let ball_q = cq.two_b();
    let mut out = Vec::new();
    for (_, cubes) in by_level.range(..=cq.level) {
        for &c in cubes {
            let cand = lattice.cube(c);
            if !cand.doubling || !cand.two_b().contains_ball(&ball_q) {
                continue;
            }
            let mut excluded = false;
            let mut cur = Some(c);
            while let Some(a) = cur {
                if labels.get(&a).is_some_and(|l| l.is_early()) {
                    excluded = true;
                    break;
                }
                if a == root {
                    break;
                }
                cur = lattice.cube(a).parent;
            }
            if !excluded {
                out.push(c);
            }
        }
    }
    out
}

/// Mass fraction of the atoms of `q` farther than 5√ε₀·r(B_Q̃) from L_Q̃ for some candidate Q̃.
fn far_fraction(lattice: &Lattice, q: CubeId, candidates: &[CubeId], eps0: f64) -> f64 {
    let m = &lattice.measure;
    let cq = lattice.cube(q);
    let mut bad = Compensated::new();
    for &x in &cq.members {
        let p = m.pos(x);
        let fails = candidates.iter().any(|&c| {
            let cand = lattice.cube(c);
            cand.beta.best_line.dist(p) > 5.0 * eps0.sqrt() * BIG_BALL * cand.r
        });
        if fails {
            bad.add(m.weight(x));
        }
    }
    if cq.mass > 0.0 {
        bad.value() / cq.mass
    } else {
        0.0
    }
}

/// Runs the stopping-time scan below the doubling cube `root`.
pub fn build_tree(lattice: &Lattice, params: &Params, root: CubeId) -> Result<TreeDecomposition> {
    params.validate()?;
    let r_cube = lattice.cube(root);
    if !r_cube.doubling {
        return Err(Error::NotDoubling(root));
    }
    let theta_root = r_cube.theta_2b();
    let line = r_cube.beta.best_line;
    let slope = params.theta_r(&line);
    let theta_sq_mu = |q: CubeId| theta_root * theta_root * lattice.cube(q).mass;

    let mut by_level: BTreeMap<usize, Vec<CubeId>> = BTreeMap::new();
    for c in lattice.descendants(root) {
        by_level.entry(lattice.cube(c).level).or_default().push(c);
    }

    let mut rows = PermRows::new(lattice, root);
    let mut labels: BTreeMap<CubeId, Label> = BTreeMap::new();
    let mut chain: BTreeMap<CubeId, f64> = BTreeMap::new();
    let mut verdicts: Vec<StopVerdict> = Vec::new();
    let mut ub_families: BTreeMap<CubeId, (Vec<CubeId>, Vec<CubeId>)> = BTreeMap::new();
    let mut active = vec![root];

    while !active.is_empty() {
        let level_start = verdicts.len();
        for &q in &active {
            let cq = lattice.cube(q);
            let window_perm = rows.window_perm(q, params.delta);
            let perm_sq = if theta_sq_mu(q) > 0.0 { window_perm / theta_sq_mu(q) } else { 0.0 };
            let chain_perm_sq = cq.parent.filter(|_| q != root).map_or(0.0, |p| chain[&p]) + perm_sq;
            chain.insert(q, chain_perm_sq);
            let density_ratio = cq.theta_2b() / theta_root;
            let mut v = StopVerdict {
                cube: q,
                level: cq.level,
                label: Label::None,
                evidence: 0.0,
                tested: !cq.leaf,
                density_ratio,
                window_perm,
                perm_sq,
                chain_perm_sq,
            };
            if !cq.leaf {
                if cq.doubling && cq.theta_2b() > params.a * theta_root {
                    v.label = Label::Hd;
                    v.evidence = density_ratio;
                } else if cq.theta_2b() < params.tau * theta_root {
                    v.label = Label::Ld;
                    v.evidence = density_ratio;
                } else if let Some(BalanceVerdict::Unbalanced { family, complement, density_ratio: dr }) = cq
                    .doubling
                    .then(|| balanced_ball_test(lattice, q, params.gamma, params.rho_prime(), params.rho_dprime()))
                    .transpose()?
                {
                    v.label = Label::Ub;
                    v.evidence = dr;
                    ub_families.insert(q, (family, complement));
                } else if chain_perm_sq > params.alpha * params.alpha {
                    v.label = Label::Bp;
                    v.evidence = chain_perm_sq;
                } else if cq.doubling && angle_between(&cq.beta.best_line, &line) > slope.theta {
                    v.label = Label::Bs;
                    v.evidence = angle_between(&cq.beta.best_line, &line);
                }
            }
            labels.insert(q, v.label);
            verdicts.push(v);
        }
        for v in &mut verdicts[level_start..] {
            if !v.tested || v.label != Label::None {
                continue;
            }
            let candidates = line_candidates(lattice, root, v.cube, &by_level, &labels);
            let frac = far_fraction(lattice, v.cube, &candidates, params.eps0);
            if frac > params.alpha.sqrt() {
                v.label = Label::F;
                v.evidence = frac;
                labels.insert(v.cube, Label::F);
            }
        }
        active = verdicts[level_start..]
            .iter()
            .filter(|v| v.tested && v.label == Label::None)
            .flat_map(|v| lattice.cube(v.cube).children.iter().copied())
            .collect();
        active.sort_by_key(|&c| (lattice.cube(c).level, c));
    }

    let tree: Vec<CubeId> = verdicts.iter().map(|v| v.cube).collect();
    let stop: Vec<CubeId> = verdicts.iter().filter(|v| v.label.is_stop()).map(|v| v.cube).collect();
    let dbtree: Vec<CubeId> =
        verdicts.iter().filter(|v| !v.label.is_stop() && lattice.cube(v.cube).doubling).map(|v| v.cube).collect();

    let stopped: BTreeSet<usize> = stop.iter().flat_map(|&q| lattice.cube(q).members.iter().copied()).collect();
    let good: Vec<usize> = r_cube.members.iter().copied().filter(|x| !stopped.contains(x)).collect();

    let far = compute_far(lattice, params, root, &verdicts, &mut rows);

    let mut parts = NextParts::default();
    for v in &verdicts {
        let q = v.cube;
        match v.label {
            Label::Hd => parts.hd.push(q),
            Label::Bs => parts.bs.push(q),
            Label::Ub => {
                let (dense, sparse) = ub_families.remove(&q).expect("family recorded");
                parts.ub_dense.extend(dense);
                parts.ub_sparse.extend(sparse);
            }
            Label::Ld | Label::Bp | Label::F => {
                parts.other.extend(maximal_doubling_below(lattice, q));
            }
            Label::None => {}
        }
    }
    let mut next: Vec<CubeId> = parts
        .hd
        .iter()
        .chain(&parts.ub_dense)
        .chain(&parts.ub_sparse)
        .chain(&parts.other)
        .chain(&parts.bs)
        .copied()
        .collect();
    next.sort_by_key(|&c| (lattice.cube(c).level, c));

    Ok(TreeDecomposition {
        root,
        root_level: r_cube.level,
        theta_root,
        line,
        slope,
        verdicts,
        tree,
        stop,
        dbtree,
        good,
        far,
        next,
        next_parts: parts,
    })
}

fn compute_far(
    lattice: &Lattice,
    params: &Params,
    root: CubeId,
    verdicts: &[StopVerdict],
    rows: &mut PermRows<'_>,
) -> Vec<usize> {
    let r_cube = lattice.cube(root);
    let theta_sq = r_cube.theta_2b().powi(2);
    if theta_sq == 0.0 {
        return Vec::new();
    }
    let scales: Vec<CubeId> = std::iter::once(root)
        .chain(verdicts.iter().filter(|v| !v.label.is_stop() && v.cube != root).map(|v| v.cube))
        .collect();
    rows.ensure(&r_cube.members);
    let m = &lattice.measure;
    let cutoff = params.c2();
    r_cube
        .members
        .iter()
        .copied()
        .filter(|&x| {
            let px = m.pos(x);
            let mut radii: Vec<f64> = scales
                .iter()
                .filter(|&&q| lattice.cube(q).two_b().contains(px))
                .map(|&q| lattice.cube(q).r)
                .collect();
            radii.sort_by(f64::total_cmp);
            radii.dedup();
            radii.iter().any(|&r| rows.at_point(x, params.delta, r) / theta_sq >= cutoff)
        })
        .collect()
}

impl TreeDecomposition {
    pub fn verdict(&self, q: CubeId) -> Option<&StopVerdict> {
        self.verdicts.iter().find(|v| v.cube == q)
    }

    pub fn family(&self, label: Label) -> Vec<CubeId> {
        self.verdicts.iter().filter(|v| v.label == label).map(|v| v.cube).collect()
    }

    /// Whether R itself was stopped.
    pub fn root_stopped(&self) -> bool {
        self.stop.contains(&self.root)
    }

    /// Σ_{Q∈BP} μ(Q) and its algebraic bound (α²Θ_R²)⁻¹ Σ_{Q̃∈Tree} p₀^{[δ,Q̃]}.
    pub fn bp_bound(&self, lattice: &Lattice, params: &Params) -> (f64, f64) {
        let lhs = lattice.family_mass(&self.family(Label::Bp));
        let mut acc = Compensated::new();
        for v in &self.verdicts {
            acc.add(v.window_perm);
        }
        let denom = params.alpha.powi(2) * self.theta_root.powi(2);
        let rhs = if denom > 0.0 { acc.value() / denom } else { f64::INFINITY };
        (lhs, rhs)
    }

    /// The exact structural properties of the scan.
    pub fn checks(&self, lattice: &Lattice, params: &Params) -> Vec<Check> {
        let tag = |s: &str| format!("tree[{}].{}", self.root, s);
        let mut out = Vec::new();

        let mut owners = vec![0usize; lattice.measure.len()];
        let mut nested = false;
        for (a, &p) in self.stop.iter().enumerate() {
            for &x in &lattice.cube(p).members {
                owners[x] += 1;
            }
            for &q in &self.stop[a + 1..] {
                nested |= lattice.is_within(p, q) || lattice.is_within(q, p);
            }
        }
        out.push(Check::holds(tag("stop_disjoint"), !nested && owners.iter().all(|&c| c <= 1)));

        out.push(Check::holds(tag("tree_contained"), self.tree.iter().all(|&q| lattice.is_within(q, self.root))));

        let expected: Vec<CubeId> = self
            .tree
            .iter()
            .copied()
            .filter(|q| lattice.cube(*q).doubling && !self.stop.contains(q))
            .collect();
        out.push(Check::holds(tag("dbtree_is_doubling_unstopped"), expected == self.dbtree));

        let mut next_owner = vec![0usize; lattice.measure.len()];
        for &q in &self.next {
            for &x in &lattice.cube(q).members {
                next_owner[x] += 1;
            }
        }
        out.push(Check::holds(
            tag("next_doubling_distinct_disjoint"),
            self.next.iter().all(|&q| lattice.cube(q).doubling && q != self.root && lattice.is_within(q, self.root))
                && next_owner.iter().all(|&c| c <= 1),
        ));

        let outside_next: Vec<usize> =
            lattice.cube(self.root).members.iter().copied().filter(|&x| next_owner[x] == 0).collect();
        out.push(Check::holds(tag("good_set_matches_next"), outside_next == self.good));

        let (lhs, rhs) = self.bp_bound(lattice, params);
        out.push(Check::le(tag("bp_mass_bound"), lhs, rhs * (1.0 + 1e-12)));

        let floor = self
            .verdicts
            .iter()
            .filter(|v| v.tested && !matches!(v.label, Label::Ld | Label::Hd))
            .map(|v| v.density_ratio)
            .fold(f64::INFINITY, f64::min);
        out.push(Check::ge(tag("density_floor"), floor, params.tau));
        out
    }

    /// max Θ(2B_Q)/Θ(2B_R) over Tree \ HD; reported, not asserted.
    pub fn density_ceiling(&self) -> f64 {
        self.verdicts.iter().filter(|v| v.label != Label::Hd).map(|v| v.density_ratio).fold(0.0, f64::max)
    }
}
