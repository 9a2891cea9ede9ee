use serde::{Deserialize, Serialize};

use super::Point2;

/// Bi-Lipschitz maps of the plane with a known constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum PlaneMap {
    Identity,
    /// Rotation by `angle` about `(cx, cy)`.
    Rotation { angle: f64, cx: f64, cy: f64 },
    /// Rotation by `k` quarter turns about the origin, exact in floating point.
    QuarterTurn { k: u8 },
    /// Reflection across the horizontal axis.
    Reflect,
    Translate { dx: f64, dy: f64 },
    /// `(x, y) ↦ (x, y + s·x)`.
    Shear { s: f64 },
    /// `(x, y) ↦ (x + b sin y, y + b sin x)` with `b = 1 − 1/L`.
    Warp { l: f64 },
    /// Logarithmic spiral `z ↦ c + (z − c)·exp(iκ log|z − c|)` with `κ = L − 1/L`.
    Spiral { l: f64, cx: f64, cy: f64 },
}

impl PlaneMap {
    /// Shear whose bi-Lipschitz constant is exactly `l`.
    pub fn shear_with_constant(l: f64) -> Self {
        PlaneMap::Shear { s: l - 1.0 / l }
    }

    /// The declared bi-Lipschitz constant.
    pub fn constant(&self) -> f64 {
        match *self {
            PlaneMap::Identity
            | PlaneMap::Rotation { .. }
            | PlaneMap::QuarterTurn { .. }
            | PlaneMap::Reflect
            | PlaneMap::Translate { .. } => 1.0,
            PlaneMap::Shear { s } => (s.abs() + (s * s + 4.0).sqrt()) / 2.0,
            PlaneMap::Warp { l } | PlaneMap::Spiral { l, .. } => l,
        }
    }

    pub fn is_isometry(&self) -> bool {
        self.constant() == 1.0
    }

    pub fn apply(&self, p: Point2<f64>) -> Point2<f64> {
        match *self {
            PlaneMap::Identity => p,
            PlaneMap::Rotation { angle, cx, cy } => {
                let (s, c) = angle.sin_cos();
                let (x, y) = (p.x - cx, p.y - cy);
                Point2::new(cx + c * x - s * y, cy + s * x + c * y)
            }
            PlaneMap::QuarterTurn { k } => match k % 4 {
                0 => p,
                1 => Point2::new(-p.y, p.x),
                2 => Point2::new(-p.x, -p.y),
                _ => Point2::new(p.y, -p.x),
            },
            PlaneMap::Reflect => Point2::new(p.x, -p.y),
            PlaneMap::Translate { dx, dy } => Point2::new(p.x + dx, p.y + dy),
            PlaneMap::Shear { s } => Point2::new(p.x, p.y + s * p.x),
            PlaneMap::Warp { l } => {
                let b = 1.0 - 1.0 / l;
                Point2::new(p.x + b * p.y.sin(), p.y + b * p.x.sin())
            }
            PlaneMap::Spiral { l, cx, cy } => {
                let kappa = l - 1.0 / l;
                let v = Point2::new(p.x - cx, p.y - cy);
                let r = v.norm();
                if r == 0.0 {
                    return p;
                }
                let (s, c) = (kappa * r.ln()).sin_cos();
                Point2::new(cx + c * v.x - s * v.y, cy + s * v.x + c * v.y)
            }
        }
    }
}
