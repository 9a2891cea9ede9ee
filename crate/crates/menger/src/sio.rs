//! Truncated singular integral operators on discrete measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelParam;
use crate::measure::{DiscreteMeasure, Point2};
use crate::permutations::perm_self;
use crate::reduce::{Accumulator, Reduction};
use crate::scalar::Real;

/// Default number of truncation lengths in a grid.
pub const DEFAULT_GRID_POINTS: usize = 16;

/// A strictly increasing list of positive truncation lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationGrid<T> {
    epsilons: Vec<T>,
}

impl<T: Real> TruncationGrid<T> {
    pub fn new(epsilons: Vec<T>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::InvalidParameter("truncation grid is empty".into()));
        }
        if epsilons.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
            return Err(Error::InvalidParameter("truncation lengths must be positive and finite".into()));
        }
        if epsilons.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("truncation lengths must be strictly increasing".into()));
        }
        Ok(Self { epsilons })
    }

    /// `n` geometrically spaced lengths from `lo` to `hi`.
    pub fn geometric(lo: T, hi: T, n: usize) -> Result<Self> {
        if n <= 1 || !(hi > lo) {
            return Self::new(vec![lo]);
        }
        let ratio = (hi / lo).powf(T::one() / T::lit((n - 1) as f64));
        let mut eps = Vec::with_capacity(n);
        let mut e = lo;
        for i in 0..n {
            eps.push(if i + 1 == n { hi } else { e });
            e = e * ratio;
        }
        Self::new(eps)
    }

    /// Sixteen geometric lengths from the discretization scale to the diameter of the support.
    pub fn default_for(m: &DiscreteMeasure<T>) -> Result<Self> {
        Self::geometric(m.scale(), m.diam(), DEFAULT_GRID_POINTS)
    }

    pub fn epsilons(&self) -> &[T] {
        &self.epsilons
    }

    /// Checks the grid against the resolution of `m`.
    pub fn validate_for(&self, m: &DiscreteMeasure<T>) -> Result<()> {
        if self.epsilons[0] < m.scale() {
            return Err(Error::InvalidParameter(format!(
                "smallest truncation {} is below the discretization scale {}",
                self.epsilons[0],
                m.scale()
            )));
        }
        Ok(())
    }
}

/// Both sides of the truncated Melnikov–Verdera identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvReport<T> {
    pub eps: T,
    /// ‖T_{K,ε}1‖².
    pub lhs: T,
    /// p_{K,ε}(μ)/3.
    pub p_third: T,
    pub remainder: T,
    /// remainder/(C*²·μ(ℂ)).
    pub normalized_remainder: T,
    pub growth: T,
    pub mass: T,
}

/// Suprema of ‖T_{k_∞,ε}1‖ and ‖T_{k₀,ε}1‖ over a grid and their growth-corrected ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Record<T> {
    pub sup_inf: T,
    pub argmax_inf: T,
    pub sup_0: T,
    pub argmax_0: T,
    pub mass: T,
    pub growth: T,
    /// sup_inf/(sup_0 + C*·√mass).
    pub ratio_fwd: T,
    /// sup_0/(sup_inf + C*·√mass).
    pub ratio_bwd: T,
}

/// T_{K,ε}f(z) = Σ_{|z−ζ| ≥ ε} f(ζ)·K(z−ζ)·w(ζ).
pub fn apply_truncated<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, f: &[T], eps: T, z: Point2<T>) -> Result<T> {
    if f.len() != m.len() {
        return Err(Error::InvalidParameter(format!("{} function values for {} atoms", f.len(), m.len())));
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("truncation must be positive, got {eps}")));
    }
    let mut acc = crate::reduce::Compensated::new();
    for (a, &fv) in m.atoms().iter().zip(f) {
        let d = z - a.pos;
        if d.norm() >= eps {
            acc.add(fv * k.apply(d) * a.weight);
        }
    }
    Ok(acc.value())
}

fn t1_at<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, i: usize, eps: T, mut acc: Accumulator<T>) -> T {
    let z = m.pos(i);
    for (j, a) in m.atoms().iter().enumerate() {
        let d = z - a.pos;
        if j != i && d.norm() >= eps {
            acc.add(k.apply(d) * a.weight);
        }
    }
    acc.value()
}

/// T_{K,ε}1 evaluated at every atom.
pub fn t1_values<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> Vec<T> {
    (0..m.len()).into_par_iter().map(|i| t1_at(k, m, i, eps, reduction.inner())).collect()
}

/// ‖T_{K,ε}1‖²_{L²(μ)}.
pub fn l2_norm_sq_t1<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> T {
    let vals = t1_values(k, m, eps, reduction);
    reduction.sum(m.len(), |i| vals[i] * vals[i] * m.weight(i))
}

/// ‖T_{K,ε}1‖_{L²(μ)}.
pub fn l2_norm_t1<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> T {
    l2_norm_sq_t1(k, m, eps, reduction).sqrt()
}

/// Maximum of ‖T_{K,ε}1‖ over the grid and the first length attaining it.
pub fn sup_l2_norm<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, grid: &TruncationGrid<T>, reduction: Reduction) -> (T, T) {
    let mut best = (T::zero(), grid.epsilons()[0]);
    for &eps in grid.epsilons() {
        let v = l2_norm_t1(k, m, eps, reduction);
        if v > best.0 {
            best = (v, eps);
        }
    }
    best
}

/// Computes ‖T_{K,ε}1‖² and p_{K,ε}(μ)/3 with matching truncations.
pub fn mv_identity_report<T: Real>(k: KernelParam<T>, m: &DiscreteMeasure<T>, eps: T, reduction: Reduction) -> Result<MvReport<T>> {
    if eps < m.scale() {
        return Err(Error::InvalidParameter(format!("truncation {eps} below the discretization scale {}", m.scale())));
    }
    let lhs = l2_norm_sq_t1(k, m, eps, reduction);
    let p_third = perm_self(k, m, eps, reduction).value / T::lit(3.0);
    let growth = m.linear_growth_constant()?;
    let mass = m.total_mass();
    let remainder = lhs - p_third;
    Ok(MvReport { eps, lhs, p_third, remainder, normalized_remainder: remainder / (growth * growth * mass), growth, mass })
}

/// Both suprema over the grid with their growth-corrected ratios.
pub fn theorem1_ratios<T: Real>(m: &DiscreteMeasure<T>, grid: &TruncationGrid<T>, reduction: Reduction) -> Result<Theorem1Record<T>> {
    if m.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let (sup_inf, argmax_inf) = sup_l2_norm(KernelParam::Infinity, m, grid, reduction);
    let (sup_0, argmax_0) = sup_l2_norm(KernelParam::Finite(T::zero()), m, grid, reduction);
    let mass = m.total_mass();
    let growth = m.linear_growth_constant()?;
    let g = growth * mass.sqrt();
    Ok(Theorem1Record {
        sup_inf,
        argmax_inf,
        sup_0,
        argmax_0,
        mass,
        growth,
        ratio_fwd: sup_inf / (sup_0 + g),
        ratio_bwd: sup_0 / (sup_inf + g),
    })
}

/// The truncated Cauchy transform of 1 at every atom, as complex numbers.
pub fn cauchy_t1_values<T: Real>(m: &DiscreteMeasure<T>, eps: T) -> Vec<Point2<T>> {
    (0..m.len())
        .into_par_iter()
        .map(|i| {
            let z = m.pos(i);
            let mut re = crate::reduce::Compensated::new();
            let mut im = crate::reduce::Compensated::new();
            for (j, a) in m.atoms().iter().enumerate() {
                let d = z - a.pos;
                if j != i && d.norm() >= eps {
                    let c = d.recip();
                    re.add(c.x * a.weight);
                    im.add(c.y * a.weight);
                }
            }
            Point2::new(re.value(), im.value())
        })
        .collect()
}

/// ‖C_{μ,ε}1‖_{L²(μ)}.
pub fn cauchy_l2_norm<T: Real>(m: &DiscreteMeasure<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("truncation must be positive, got {eps}")));
    }
    let vals = cauchy_t1_values(m, eps);
    let s = Reduction::default().sum(m.len(), |i| vals[i].norm_sqr() * m.weight(i));
    Ok(s.sqrt())
}
