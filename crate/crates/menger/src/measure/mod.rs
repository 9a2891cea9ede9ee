//! Finite atomic planar measures.

mod generate;
mod growth;
mod io;
mod maps;
mod point;

pub use generate::{generate, Recipe};
pub use growth::{AdRegularity, GrowthWitness};
pub use io::MeasureFile;
pub use maps::PlaneMap;
pub use point::{Ball, Point2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::ordered_sum;
use crate::scalar::Real;

/// A weighted point mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub pos: Point2<T>,
    pub weight: T,
}

impl<T: Real> Atom<T> {
    pub fn new(pos: Point2<T>, weight: T) -> Self {
        Self { pos, weight }
    }
}

/// A density value together with a resolution flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density<T> {
    pub value: T,
    /// The ball radius is below the discretization scale of the measure.
    pub below_resolution: bool,
}

/// A finite atomic measure on the plane.
///
/// Weights are positive, positions pairwise distinct and the discretization scale
/// does not exceed the smallest pairwise distance.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    atoms: Vec<Atom<T>>,
    scale: T,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Builds a measure, validating every invariant.
    pub fn new(atoms: Vec<Atom<T>>, scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidMeasure(format!("scale must be positive and finite, got {scale}")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.pos.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom {i} has a non-finite position")));
            }
            if !(a.weight > T::zero()) || !a.weight.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom {i} has weight {}", a.weight)));
            }
        }
        let m = Self { atoms, scale };
        if let Some((i, j)) = m.find_duplicate() {
            return Err(Error::InvalidMeasure(format!("atoms {i} and {j} coincide")));
        }
        if let Some(d) = m.min_distance() {
            if scale > d {
                return Err(Error::InvalidMeasure(format!(
                    "scale {scale} exceeds the minimal pairwise distance {d}"
                )));
            }
        }
        Ok(m)
    }

    /// Builds a measure whose scale is half the minimal pairwise distance (1 for fewer than two atoms).
    pub fn with_default_scale(atoms: Vec<Atom<T>>) -> Result<Self> {
        let probe = Self { atoms, scale: T::one() };
        if let Some((i, j)) = probe.find_duplicate() {
            return Err(Error::InvalidMeasure(format!("atoms {i} and {j} coincide")));
        }
        let scale = probe.min_distance().map(|d| d / T::lit(2.0)).unwrap_or_else(T::one);
        Self::new(probe.atoms, scale)
    }

    pub fn empty(scale: T) -> Self {
        Self { atoms: Vec::new(), scale }
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.atoms.len()).collect();
        idx.sort_by(|&a, &b| {
            let (p, q) = (self.atoms[a].pos, self.atoms[b].pos);
            p.x.partial_cmp(&q.x).unwrap().then(p.y.partial_cmp(&q.y).unwrap()).then(a.cmp(&b))
        });
        idx.windows(2)
            .find(|w| self.atoms[w[0]].pos == self.atoms[w[1]].pos)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    #[inline]
    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    #[inline]
    pub fn scale(&self) -> T {
        self.scale
    }

    #[inline]
    pub fn pos(&self, i: usize) -> Point2<T> {
        self.atoms[i].pos
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.atoms[i].weight
    }

    /// μ(ℂ), summed in atom order with compensation.
    pub fn total_mass(&self) -> T {
        let ws: Vec<T> = self.atoms.iter().map(|a| a.weight).collect();
        ordered_sum(&ws)
    }

    /// Indices of atoms strictly inside `ball`.
    pub fn indices_in(&self, ball: &Ball<T>) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| ball.contains(self.atoms[i].pos)).collect()
    }

    /// μ(B) for an open ball.
    pub fn mass_in(&self, ball: &Ball<T>) -> T {
        let mut s = crate::reduce::Compensated::new();
        for a in &self.atoms {
            if ball.contains(a.pos) {
                s.add(a.weight);
            }
        }
        s.value()
    }

    /// μ⌊B: the atoms strictly inside `ball`, same scale.
    pub fn restrict(&self, ball: &Ball<T>) -> Self {
        Self {
            atoms: self.atoms.iter().copied().filter(|a| ball.contains(a.pos)).collect(),
            scale: self.scale,
        }
    }

    /// The sub-measure on the given atom indices, same scale.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { atoms: indices.iter().map(|&i| self.atoms[i]).collect(), scale: self.scale }
    }

    /// Θ_μ(B) = μ(B)/r.
    pub fn density(&self, ball: &Ball<T>) -> Density<T> {
        Density { value: self.mass_in(ball) / ball.radius, below_resolution: ball.radius < self.scale }
    }

    /// Diameter of the support (0 for fewer than two atoms).
    pub fn diam(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                d = d.max(self.atoms[i].pos.dist(self.atoms[j].pos));
            }
        }
        d
    }

    /// Smallest pairwise distance, if there are at least two atoms.
    pub fn min_distance(&self) -> Option<T> {
        let n = self.atoms.len();
        if n < 2 {
            return None;
        }
        let mut d = T::infinity();
        for i in 0..n {
            for j in i + 1..n {
                d = d.min(self.atoms[i].pos.dist(self.atoms[j].pos));
            }
        }
        Some(d)
    }

    /// Weighted centroid, if the measure is nonempty.
    pub fn centroid(&self) -> Option<Point2<T>> {
        if self.is_empty() {
            return None;
        }
        let m = self.total_mass();
        let mut x = crate::reduce::Compensated::new();
        let mut y = crate::reduce::Compensated::new();
        for a in &self.atoms {
            x.add(a.pos.x * a.weight);
            y.add(a.pos.y * a.weight);
        }
        Some(Point2::new(x.value() / m, y.value() / m))
    }

    /// Multiplies positions and weights by the given factors; the scale follows the positions.
    pub fn rescaled(&self, length: T, mass: T) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom::new(a.pos * length, a.weight * mass)).collect(),
            scale: self.scale * length,
        }
    }

    /// Image measure under `map`, whose bi-Lipschitz constant is `lipschitz`.
    pub fn pushforward<F>(&self, map: F, lipschitz: T) -> Result<Self>
    where
        F: Fn(Point2<T>) -> Point2<T>,
    {
        if !(lipschitz >= T::one()) {
            return Err(Error::InvalidParameter(format!("bi-Lipschitz constant must be >= 1, got {lipschitz}")));
        }
        let atoms: Vec<Atom<T>> = self.atoms.iter().map(|a| Atom::new(map(a.pos), a.weight)).collect();
        let image = Self { atoms, scale: self.scale / lipschitz };
        if let Some((i, j)) = image.find_duplicate() {
            return Err(Error::MapCollision(i, j));
        }
        if image.atoms.iter().any(|a| !a.pos.is_finite()) {
            return Err(Error::InvalidParameter("map produced a non-finite position".into()));
        }
        Ok(image)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> DiscreteMeasure<U> {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|a| Atom::new(a.pos.cast(), U::lit(a.weight.as_f64()))).collect(),
            scale: U::lit(self.scale.as_f64()),
        }
    }
}
