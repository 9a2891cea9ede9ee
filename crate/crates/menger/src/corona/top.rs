use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tree::{build_tree, Label, TreeDecomposition};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::lattice::{CubeId, Lattice};
use crate::permutations::{curvature_measure, perm_self};
use crate::reduce::{Compensated, Reduction};
use crate::KernelParam;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoronaDecomposition {
    pub params: Params,
    /// Top_0, Top_1, ... in (level, id) order.
    pub generations: Vec<Vec<CubeId>>,
    /// One tree per Top cube, in generation order.
    pub trees: Vec<TreeDecomposition>,
    /// Whether the iteration stopped at the generation cap with cubes left over.
    pub truncated: bool,
}

/// Iterates Next from the lattice root until no cubes remain or `k_max` generations are built.
pub fn build_top(lattice: &Lattice, params: &Params, k_max: Option<usize>) -> Result<CoronaDecomposition> {
    params.validate()?;
    let root = lattice.root();
    if !lattice.cube(root).doubling {
        return Err(Error::NotDoubling(root));
    }
    let mut generations = Vec::new();
    let mut trees = Vec::new();
    let mut current = vec![root];
    let mut truncated = false;
    while !current.is_empty() {
        if k_max.is_some_and(|k| generations.len() >= k) {
            truncated = true;
            break;
        }
        let built: Vec<TreeDecomposition> =
            current.par_iter().map(|&r| build_tree(lattice, params, r)).collect::<Result<_>>()?;
        let mut next: Vec<CubeId> = built.iter().flat_map(|t| t.next.iter().copied()).collect();
        next.sort_by_key(|&c| (lattice.cube(c).level, c));
        generations.push(std::mem::take(&mut current));
        trees.extend(built);
        current = next;
    }
    Ok(CoronaDecomposition { params: *params, generations, trees, truncated })
}

impl CoronaDecomposition {
    pub fn top(&self) -> Vec<CubeId> {
        self.generations.iter().flatten().copied().collect()
    }

    pub fn tree(&self, root: CubeId) -> Option<&TreeDecomposition> {
        self.trees.iter().find(|t| t.root == root)
    }

    /// The JSON dump: generations, one verdict table per tree and every report record.
    pub fn dump(&self, lattice: &Lattice, reduction: Reduction) -> Result<CoronaDump> {
        let trees = self
            .trees
            .iter()
            .map(|t| TreeDump {
                root: t.root,
                level: t.root_level,
                theta_root: t.theta_root,
                line: t.line,
                slope: t.slope,
                verdicts: t.verdicts.clone(),
                stop: t.stop.clone(),
                next: t.next.clone(),
                good_atoms: t.good.len(),
                far_atoms: t.far.len(),
                id_class: id_classify(lattice, t, &self.params),
                stop_mass: stop_mass_report(lattice, t, &self.params),
            })
            .collect();
        Ok(CoronaDump {
            params: self.params,
            generations: self.generations.clone(),
            truncated: self.truncated,
            trees,
            packing: packing_sum(self, lattice, reduction)?,
            beta_packing: beta_packing_sum(lattice, reduction),
            checks: self.checks(lattice),
        })
    }

    /// Every per-tree check plus generation nesting.
    pub fn checks(&self, lattice: &Lattice) -> Vec<Check> {
        let mut out: Vec<Check> = self.trees.iter().flat_map(|t| t.checks(lattice, &self.params)).collect();
        let nested = self.generations.windows(2).all(|w| {
            w[1].iter().all(|&q| w[0].iter().filter(|&&r| q != r && lattice.is_within(q, r)).count() == 1)
        });
        out.push(Check::holds("corona.generations_nested", nested));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDump {
    pub root: CubeId,
    pub level: usize,
    pub theta_root: f64,
    pub line: crate::kernels::Line<f64>,
    pub slope: super::params::SlopeRule,
    /// In (level, id) order.
    pub verdicts: Vec<super::tree::StopVerdict>,
    pub stop: Vec<CubeId>,
    pub next: Vec<CubeId>,
    pub good_atoms: usize,
    pub far_atoms: usize,
    pub id_class: IdClass,
    pub stop_mass: StopMassReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoronaDump {
    pub params: Params,
    pub generations: Vec<Vec<CubeId>>,
    pub truncated: bool,
    pub trees: Vec<TreeDump>,
    pub packing: PackingRecord,
    pub beta_packing: BetaPackingRecord,
    pub checks: Vec<Check>,
}

/// Whether the HD or ŨB cubes of a tree carry a quarter of μ(R).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdClass {
    pub root: CubeId,
    pub id_h: bool,
    pub id_u: bool,
    pub hd_mass: f64,
    pub ub_mass: f64,
    /// Θ(2B_R)²μ(R).
    pub root_energy: f64,
    /// Σ_{Q∈Next(R)} Θ(2B_Q)²μ(Q).
    pub next_energy: f64,
    /// root_energy/(τ⁴·next_energy).
    pub observed_constant: f64,
}

pub fn id_classify(lattice: &Lattice, tree: &TreeDecomposition, params: &Params) -> IdClass {
    let r = lattice.cube(tree.root);
    let hd_mass = lattice.family_mass(&tree.next_parts.hd);
    let ub_mass = lattice.family_mass(&tree.next_parts.ub_tilde());
    let root_energy = r.theta_2b().powi(2) * r.mass;
    let mut acc = Compensated::new();
    for &q in &tree.next {
        let c = lattice.cube(q);
        acc.add(c.theta_2b().powi(2) * c.mass);
    }
    let next_energy = acc.value();
    let denom = params.tau.powi(4) * next_energy;
    IdClass {
        root: tree.root,
        id_h: hd_mass >= r.mass / 4.0,
        id_u: ub_mass >= r.mass / 4.0,
        hd_mass,
        ub_mass,
        root_energy,
        next_energy,
        observed_constant: if denom > 0.0 { root_energy / denom } else { f64::INFINITY },
    }
}

/// Both sides of the Top packing sandwich.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingRecord {
    /// Σ_{R∈Top} Θ(2B_R)²μ(R).
    pub sum: f64,
    pub p0: f64,
    pub p_inf: f64,
    pub growth: f64,
    /// C*²μ(ℂ).
    pub growth_term: f64,
    /// sum/(p0 + growth_term).
    pub ratio: f64,
    /// p_∞/sum.
    pub c_left: f64,
    /// Same as `ratio`.
    pub c_right: f64,
}

pub fn packing_sum(corona: &CoronaDecomposition, lattice: &Lattice, reduction: Reduction) -> Result<PackingRecord> {
    let m = &lattice.measure;
    let mut acc = Compensated::new();
    for r in corona.top() {
        let c = lattice.cube(r);
        acc.add(c.theta_2b().powi(2) * c.mass);
    }
    let sum = acc.value();
    let p0 = perm_self(KernelParam::Finite(0.0), m, 0.0, reduction).value;
    let p_inf = perm_self(KernelParam::Infinity, m, 0.0, reduction).value;
    let growth = m.linear_growth_constant()?;
    let growth_term = growth * growth * m.total_mass();
    let ratio = sum / (p0 + growth_term);
    Ok(PackingRecord { sum, p0, p_inf, growth, growth_term, ratio, c_left: p_inf / sum, c_right: ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPackingRecord {
    /// Σ_Q β₂(2B_Q)²Θ(2B_Q)μ(Q) over every lattice cube.
    pub lhs: f64,
    pub curvature: f64,
    pub mass: f64,
    /// c²(μ) + μ(ℂ).
    pub rhs: f64,
    pub ratio: f64,
    /// β₂(2B_Q)² ≤ 4Θ(2B_Q) on every cube.
    pub crude_bound_holds: bool,
}

pub fn beta_packing_sum(lattice: &Lattice, reduction: Reduction) -> BetaPackingRecord {
    let mut acc = Compensated::new();
    let mut crude = true;
    for q in &lattice.cubes {
        let theta = q.theta_2b();
        crude &= q.beta.beta_sq <= 4.0 * theta * (1.0 + 1e-12);
        acc.add(q.beta.beta_sq * theta * q.mass);
    }
    let lhs = acc.value();
    let curvature = curvature_measure(&lattice.measure, 0.0, reduction).value;
    let mass = lattice.measure.total_mass();
    let rhs = curvature + mass;
    BetaPackingRecord { lhs, curvature, mass, rhs, ratio: lhs / rhs, crude_bound_holds: crude }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMass {
    pub label: Label,
    pub mass: f64,
    /// mass/μ(R).
    pub fraction: f64,
    pub bound: f64,
    /// Whether the bound applies to this root.
    pub applies: bool,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopMassReport {
    pub root: CubeId,
    pub families: Vec<FamilyMass>,
    pub bp_lhs: f64,
    pub bp_rhs: f64,
    pub bp_bound_holds: bool,
    /// μ(R_Far)/μ(R), compared with α.
    pub far_fraction: f64,
    pub far_within_alpha: bool,
}

pub fn stop_mass_report(lattice: &Lattice, tree: &TreeDecomposition, params: &Params) -> StopMassReport {
    let mu_r = lattice.cube(tree.root).mass;
    let frac = |m: f64| if mu_r > 0.0 { m / mu_r } else { 0.0 };
    let family = |label: Label, bound: f64, applies: bool| {
        let mass = lattice.family_mass(&tree.family(label));
        let fraction = frac(mass);
        FamilyMass { label, mass, fraction, bound, applies, within_bound: fraction <= bound }
    };
    let (bp_lhs, bp_rhs) = tree.bp_bound(lattice, params);
    let mut far = Compensated::new();
    for &x in &tree.far {
        far.add(lattice.measure.weight(x));
    }
    let far_fraction = frac(far.value());
    StopMassReport {
        root: tree.root,
        families: vec![
            family(Label::Ld, params.tau.sqrt() / 3.0, true),
            family(Label::Bp, if mu_r > 0.0 { bp_rhs / mu_r } else { f64::INFINITY }, true),
            family(Label::F, params.alpha.sqrt(), true),
            family(Label::Bs, params.tau.sqrt() / 3.0, tree.slope.in_t_vf),
        ],
        bp_lhs,
        bp_rhs,
        bp_bound_holds: bp_lhs <= bp_rhs * (1.0 + 1e-12),
        far_fraction,
        far_within_alpha: far_fraction <= params.alpha,
    }
}
