//! Permutations of measures, Menger curvature, truncated singular integrals, and the
//! multiscale machinery (lattices, stopping-time coronas, Lipschitz graphs) on finite
//! atomic measures in the plane.
//!
//! The geometric core is generic over [`Real`] (`f32` or `f64`). The multiscale
//! layers work in `f64`; the aliases below name the `f64` instances.

pub mod check;
pub mod corona;
pub mod error;
pub mod experiments;
pub mod graphfit;
pub mod kernels;
pub mod lattice;
pub mod measure;
pub mod naive;
pub mod permutations;
pub mod reduce;
pub mod scalar;
pub mod sio;

pub use error::{Error, Result};
pub use kernels::{KernelParam, Line};
pub use measure::{Atom, Ball, DiscreteMeasure, Point2, Recipe};
pub use reduce::Reduction;
pub use scalar::Real;

pub type Point = Point2<f64>;
pub type Measure = DiscreteMeasure<f64>;
pub type Disc = Ball<f64>;
pub type Kernel = KernelParam<f64>;
pub type AffineLine = Line<f64>;
