use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CubeId, Lattice, BIG_BALL};
use crate::reduce::Compensated;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BalanceVerdict {
    /// Two atom-centered balls of radius ρ′·r(Q), each with mass ≥ ρ″·μ(Q) inside Q,
    /// whose points in Q are at least γ·r(B_Q) apart.
    Balanced { centers: [usize; 2], radius: f64, masses: [f64; 2], separation: f64 },
    /// No such pair exists. `family` lists the maximal doubling cubes strictly inside Q
    /// that are denser than Q; `density_ratio` is Σ_P Θ(2B_P)²μ(P) / (γ⁻²Θ(2B_Q)²μ(Q)) over it.
    Unbalanced { family: Vec<CubeId>, complement: Vec<CubeId>, density_ratio: f64 },
}

impl BalanceVerdict {
    pub fn is_balanced(&self) -> bool {
        matches!(self, BalanceVerdict::Balanced { .. })
    }
}

/// The maximal doubling cubes strictly inside `q`.
pub fn maximal_doubling_below(lattice: &Lattice, q: CubeId) -> Vec<CubeId> {
    let mut out = Vec::new();
    for &c in &lattice.cube(q).children {
        out.extend(lattice.maximal_doubling(c).cubes);
    }
    out.sort_by_key(|&c| (lattice.cube(c).level, c));
    out
}

/// Searches for a γ-balanced pair of balls in the doubling cube `q`.
pub fn balanced_ball_test(lattice: &Lattice, q: CubeId, gamma: f64, rho1: f64, rho2: f64) -> Result<BalanceVerdict> {
    let cube = lattice.cube(q);
    if !cube.doubling {
        return Err(Error::NotDoubling(q));
    }
    let m = &lattice.measure;
    let radius = rho1 * cube.r;
    let sep = gamma * BIG_BALL * cube.r;
    let need = rho2 * cube.mass;
    let members = &cube.members;
    let mut qualified: Vec<(usize, Vec<usize>, f64)> = Vec::new();
    for &xi in members {
        let c = m.pos(xi);
        let inside: Vec<usize> = members.iter().copied().filter(|&j| m.pos(j).dist(c) < radius).collect();
        let mut acc = Compensated::new();
        for &j in &inside {
            acc.add(m.weight(j));
        }
        if acc.value() >= need {
            qualified.push((xi, inside, acc.value()));
        }
    }
    for a in 0..qualified.len() {
        for b in a + 1..qualified.len() {
            let (x1, s1, m1) = &qualified[a];
            let (x2, s2, m2) = &qualified[b];
            let centre_gap = m.pos(*x1).dist(m.pos(*x2));
            if centre_gap + 2.0 * radius < sep {
                continue;
            }
            let gap = s1
                .iter()
                .flat_map(|&i| s2.iter().map(move |&j| (i, j)))
                .map(|(i, j)| m.pos(i).dist(m.pos(j)))
                .fold(f64::INFINITY, f64::min);
            if gap >= sep {
                return Ok(BalanceVerdict::Balanced { centers: [*x1, *x2], radius, masses: [*m1, *m2], separation: gap });
            }
        }
    }
    let below = maximal_doubling_below(lattice, q);
    let theta_q = cube.theta_2b();
    let (family, complement): (Vec<CubeId>, Vec<CubeId>) =
        below.into_iter().partition(|&p| lattice.cube(p).theta_2b() > theta_q);
    let mut acc = Compensated::new();
    for &p in &family {
        let c = lattice.cube(p);
        acc.add(c.theta_2b().powi(2) * c.mass);
    }
    let reference = theta_q.powi(2) * cube.mass / (gamma * gamma);
    let density_ratio = if reference > 0.0 { acc.value() / reference } else { f64::INFINITY };
    Ok(BalanceVerdict::Unbalanced { family, complement, density_ratio })
}
