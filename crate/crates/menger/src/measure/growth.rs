use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DiscreteMeasure, Point2};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The ball attaining a growth supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness<T> {
    pub value: T,
    pub center: usize,
    pub radius: T,
}

/// Two-sided linear bounds `r/lower ≤ μ(B(x,r)) ≤ upper·r` over a range of radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdRegularity<T> {
    /// Smallest `C` with `r/C ≤ μ(B)`.
    pub lower: T,
    /// Smallest `C` with `μ(B) ≤ C·r`.
    pub upper: T,
    /// `max(lower, upper)`.
    pub constant: T,
    pub balls_checked: usize,
}

fn sorted_distances<T: Real>(pts: &[Point2<T>], weights: &[T], i: usize) -> Vec<(T, T)> {
    let mut d: Vec<(T, T)> = (0..pts.len()).filter(|&j| j != i).map(|j| (pts[i].dist(pts[j]), weights[j])).collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    d
}

/// Mass of the open ball of radius `r` around atom `i`, given its sorted neighbour distances.
fn open_mass<T: Real>(self_w: T, sorted: &[(T, T)], r: T) -> T {
    let mut m = self_w;
    for &(d, w) in sorted {
        if d < r {
            m += w;
        } else {
            break;
        }
    }
    m
}

impl<T: Real> DiscreteMeasure<T> {
    /// C* = sup μ(B(x,r))/r over atom-centered open balls with radii drawn from the
    /// pairwise distances, the diameter and the discretization scale, restricted to `r ≥ scale`.
    pub fn linear_growth_constant(&self) -> Result<T> {
        Ok(self.linear_growth_witness()?.value)
    }

    pub fn linear_growth_witness(&self) -> Result<GrowthWitness<T>> {
        if self.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let pts: Vec<Point2<T>> = self.atoms().iter().map(|a| a.pos).collect();
        let ws: Vec<T> = self.atoms().iter().map(|a| a.weight).collect();
        let s = self.scale();
        let diam = self.diam();
        let per_center: Vec<GrowthWitness<T>> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let sorted = sorted_distances(&pts, &ws, i);
                let mut best = GrowthWitness { value: open_mass(ws[i], &sorted, s) / s, center: i, radius: s };
                let mut consider = |r: T| {
                    if r >= s {
                        let v = open_mass(ws[i], &sorted, r) / r;
                        if v > best.value {
                            best = GrowthWitness { value: v, center: i, radius: r };
                        }
                    }
                };
                for &(d, _) in &sorted {
                    consider(d);
                }
                consider(diam);
                best
            })
            .collect();
        let mut best = per_center[0];
        for w in per_center {
            if w.value > best.value {
                best = w;
            }
        }
        Ok(best)
    }

    /// Tightest two-sided linear bounds over atom-centered balls with radii in `[r_min, r_max]`
    /// taken from the pairwise distances and the two endpoints.
    pub fn ad_regularity_bounds(&self, r_min: T, r_max: T) -> Result<AdRegularity<T>> {
        if self.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if !(r_min > T::zero()) || !(r_min <= r_max) {
            return Err(Error::NoCandidateBalls(r_min.as_f64(), r_max.as_f64()));
        }
        let tol = T::lit(1e-12) * r_max.max(T::one());
        if r_min + tol < self.scale() || r_max > self.diam() + tol {
            return Err(Error::InvalidParameter(format!(
                "scale range [{r_min}, {r_max}] outside [{}, {}]",
                self.scale(),
                self.diam()
            )));
        }
        let pts: Vec<Point2<T>> = self.atoms().iter().map(|a| a.pos).collect();
        let ws: Vec<T> = self.atoms().iter().map(|a| a.weight).collect();
        let per_center: Vec<(T, T, usize)> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let sorted = sorted_distances(&pts, &ws, i);
                let mut lo = T::zero();
                let mut hi = T::zero();
                let mut count = 0usize;
                let mut consider = |r: T| {
                    let m = open_mass(ws[i], &sorted, r);
                    hi = hi.max(m / r);
                    lo = lo.max(r / m);
                    count += 1;
                };
                consider(r_min);
                for &(d, _) in &sorted {
                    if d > r_min && d < r_max {
                        consider(d);
                    }
                }
                if r_max > r_min {
                    consider(r_max);
                }
                (lo, hi, count)
            })
            .collect();
        let mut lower = T::zero();
        let mut upper = T::zero();
        let mut checked = 0;
        for (lo, hi, c) in per_center {
            lower = lower.max(lo);
            upper = upper.max(hi);
            checked += c;
        }
        Ok(AdRegularity { lower, upper, constant: lower.max(upper), balls_checked: checked })
    }
}
