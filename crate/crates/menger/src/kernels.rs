//! The kernels k_t, k_∞ and the Cauchy kernel, affine lines and angles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Point2;
use crate::scalar::Real;

/// Selects k_t for a finite `t`, or k_∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelParam<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> KernelParam<T> {
    /// Kernel value without the singularity check. Not finite at the origin.
    #[inline(always)]
    pub fn apply(self, z: Point2<T>) -> T {
        let r2 = z.norm_sqr();
        match self {
            KernelParam::Infinity => z.x / r2,
            KernelParam::Finite(t) => {
                let q = z.x / r2;
                if t == T::zero() {
                    q * q * z.x
                } else {
                    q * (z.x * z.x / r2 + t)
                }
            }
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, KernelParam::Infinity)
    }
}

impl<T: Real> fmt::Display for KernelParam<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelParam::Finite(t) => write!(f, "{t}"),
            KernelParam::Infinity => write!(f, "inf"),
        }
    }
}

impl<T: Real> FromStr for KernelParam<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(KernelParam::Infinity),
            v => {
                let t: f64 = v.parse().map_err(|_| Error::Parse(format!("bad kernel parameter '{v}'")))?;
                if t.is_finite() {
                    Ok(KernelParam::Finite(T::lit(t)))
                } else {
                    Err(Error::Parse("finite kernel parameter expected; use 'inf' for k_∞".into()))
                }
            }
        }
    }
}

/// k_t(z) = (Re z)³/|z|⁴ + t·Re z/|z|², or k_∞(z) = Re z/|z|².
pub fn kernel_eval<T: Real>(k: KernelParam<T>, z: Point2<T>) -> Result<T> {
    if z.x == T::zero() && z.y == T::zero() {
        return Err(Error::KernelSingularity);
    }
    Ok(k.apply(z))
}

/// The Cauchy kernel 1/z as a complex number.
pub fn cauchy_kernel<T: Real>(z: Point2<T>) -> Result<Point2<T>> {
    if z.x == T::zero() && z.y == T::zero() {
        return Err(Error::KernelSingularity);
    }
    Ok(z.recip())
}

/// Angles in `[0, π)` of the lines through the origin on which k_t vanishes.
pub fn zero_lines<T: Real>(t: T) -> Vec<T> {
    let half_pi = T::FRAC_PI_2();
    let mut out = vec![half_pi];
    if t >= -T::one() && t < T::zero() {
        let theta = (-t).sqrt().min(T::one()).acos();
        out.push(theta);
        let mirror = T::PI() - theta;
        if mirror < T::PI() && mirror != theta {
            out.push(mirror);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// An affine line through `anchor` with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub anchor: Point2<T>,
    pub direction: Point2<T>,
}

impl<T: Real> Line<T> {
    /// A line through `anchor` along `direction` (normalized here).
    pub fn new(anchor: Point2<T>, direction: Point2<T>) -> Result<Self> {
        let n = direction.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidParameter("line direction must be a nonzero finite vector".into()));
        }
        Ok(Self { anchor, direction: direction * (T::one() / n) })
    }

    /// The line through `anchor` making angle `angle` with the horizontal axis.
    pub fn from_angle(anchor: Point2<T>, angle: T) -> Self {
        Self { anchor, direction: Point2::new(angle.cos(), angle.sin()) }
    }

    /// The line through two distinct points.
    pub fn through(p: Point2<T>, q: Point2<T>) -> Result<Self> {
        if p == q {
            return Err(Error::CoincidentPoints);
        }
        Self::new(p, q - p)
    }

    pub fn horizontal() -> Self {
        Self { anchor: Point2::origin(), direction: Point2::new(T::one(), T::zero()) }
    }

    pub fn vertical() -> Self {
        Self { anchor: Point2::origin(), direction: Point2::new(T::zero(), T::one()) }
    }

    /// Canonical representative: direction with angle in `[0, π)`, anchor the foot of the origin.
    pub fn canonical(&self) -> Self {
        let d = self.direction;
        let d = if d.y < T::zero() || (d.y == T::zero() && d.x < T::zero()) { -d } else { d };
        let s = self.anchor.dot(d);
        Self { anchor: self.anchor - d * s, direction: d }
    }

    /// Whether two values describe the same line up to `tol`.
    pub fn same_line(&self, other: &Self, tol: T) -> bool {
        angle_between(self, other) <= tol && other.dist(self.anchor) <= tol
    }

    /// Angle of the line in `[0, π)`.
    pub fn angle(&self) -> T {
        let c = self.canonical().direction;
        let a = c.y.atan2(c.x);
        if a >= T::PI() {
            T::zero()
        } else {
            a
        }
    }

    /// Signed on-line coordinate of the orthogonal projection of `p`.
    #[inline]
    pub fn project(&self, p: Point2<T>) -> T {
        (p - self.anchor).dot(self.direction)
    }

    /// Signed orthogonal offset of `p` (positive to the left of the direction).
    #[inline]
    pub fn offset(&self, p: Point2<T>) -> T {
        self.direction.cross(p - self.anchor)
    }

    #[inline]
    pub fn dist(&self, p: Point2<T>) -> T {
        self.offset(p).abs()
    }

    /// The point at on-line coordinate `s` and normal offset `h`.
    #[inline]
    pub fn point_at(&self, s: T, h: T) -> Point2<T> {
        let n = Point2::new(-self.direction.y, self.direction.x);
        self.anchor + self.direction * s + n * h
    }
}

/// θ_V(L): the angle between `line` and the vertical axis, in `[0, π/2]`.
pub fn theta_vertical<T: Real>(line: &Line<T>) -> T {
    let d = line.direction;
    d.x.abs().atan2(d.y.abs())
}

/// The smallest angle formed by two lines, in `[0, π/2]`.
pub fn angle_between<T: Real>(a: &Line<T>, b: &Line<T>) -> T {
    let (u, v) = (a.direction, b.direction);
    u.cross(v).abs().atan2(u.dot(v).abs())
}

/// Sum of the vertical angles of the three lines spanned by a triple.
pub fn vertical_angle_sum<T: Real>(z1: Point2<T>, z2: Point2<T>, z3: Point2<T>) -> Result<T> {
    Ok(theta_vertical(&Line::through(z1, z2)?)
        + theta_vertical(&Line::through(z1, z3)?)
        + theta_vertical(&Line::through(z2, z3)?))
}

/// Membership of a triple in V_Far(θ).
pub fn v_far<T: Real>(z1: Point2<T>, z2: Point2<T>, z3: Point2<T>, theta: T) -> Result<bool> {
    Ok(vertical_angle_sum(z1, z2, z3)? >= theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(KernelParam::Finite(0.0), p(1.0, 0.0)).unwrap(), 1.0);
        for t in [-3.0, 0.0, 2.5] {
            assert_eq!(kernel_eval(KernelParam::Finite(t), p(0.0, 1.0)).unwrap(), 0.0);
        }
        assert_eq!(kernel_eval(KernelParam::Infinity, p(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(kernel_eval(KernelParam::Finite(1.0), p(0.0, 0.0)), Err(Error::KernelSingularity));
    }

    #[test]
    fn cauchy_examples() {
        assert_eq!(cauchy_kernel(p(1.0, 0.0)).unwrap(), p(1.0, 0.0));
        assert_eq!(cauchy_kernel(p(0.0, 1.0)).unwrap(), p(0.0, -1.0));
        assert_eq!(cauchy_kernel(p(1.0, 1.0)).unwrap(), p(0.5, -0.5));
        assert!(cauchy_kernel(p(0.0, 0.0)).is_err());
    }

    #[test]
    fn line_angles() {
        let slope1 = Line::new(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert_eq!(theta_vertical(&Line::<f64>::vertical()), 0.0);
        assert_eq!(theta_vertical(&Line::<f64>::horizontal()), FRAC_PI_2);
        assert!((theta_vertical(&slope1) - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(angle_between(&slope1, &slope1), 0.0);
        assert_eq!(angle_between(&Line::<f64>::vertical(), &Line::horizontal()), FRAC_PI_2);
        assert!((angle_between(&Line::<f64>::horizontal(), &slope1) - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn canonical_lines_agree() {
        let a = Line::new(p(1.0, 1.0), p(2.0, 2.0)).unwrap();
        let b = Line::new(p(-3.0, -3.0), p(-1.0, -1.0)).unwrap();
        let (ca, cb) = (a.canonical(), b.canonical());
        assert!((ca.anchor - cb.anchor).norm() < 1e-12);
        assert_eq!(ca.direction, cb.direction);
        assert!(a.same_line(&b, 1e-12));
        assert!(!a.same_line(&Line::new(p(0.0, 1.0), p(1.0, 1.0)).unwrap(), 1e-12));
    }

    #[test]
    fn v_far_examples() {
        assert!(!v_far(p(0.0, 0.0), p(0.0, 1.0), p(0.0, 2.0), 0.1).unwrap());
        assert!(v_far(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), 1.0).unwrap());
        assert!(v_far(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), FRAC_PI_2).unwrap());
        let s = vertical_angle_sum(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)).unwrap();
        assert!((s - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert!(v_far(p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0), 0.1).is_err());
    }
}
