use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Atom, DiscreteMeasure, Point2};
use crate::error::{Error, Result};

/// Deterministic measure generators.
///
/// The textual form is `kind:key=value,...`; a perturbed variant is written
/// `perturbed:amplitude=a/<base recipe>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    /// `n` equally spaced atoms on `[0,1] × {0}`, weight `1/n` each.
    Segment { n: usize },
    /// `n` equally spaced atoms on the segment from the origin of the given length and angle, weight `length/n`.
    Line { n: usize, angle: f64, length: f64 },
    /// Graph of `x ↦ slope·sin(2πx)/(2π)` on `[0,1]`, weights proportional to arclength, total mass the arclength.
    LipschitzGraph { n: usize, slope: f64 },
    /// `n` equally spaced atoms on a circle centred at the origin, total mass `2π·radius`.
    Circle { n: usize, radius: f64 },
    /// Level-`level` four-corner Cantor measure on the unit square.
    Cantor4 { level: u32 },
    /// The base measure with every atom displaced uniformly in `[-a, a]²`.
    Perturbed { base: Box<Recipe>, amplitude: f64 },
}

/// Profile of the Lipschitz graph family; `slope` is the exact Lipschitz constant.
pub fn graph_profile(slope: f64, x: f64) -> f64 {
    slope * (2.0 * PI * x).sin() / (2.0 * PI)
}

fn graph_derivative(slope: f64, x: f64) -> f64 {
    slope * (2.0 * PI * x).cos()
}

impl Recipe {
    /// Number of atoms this recipe produces.
    pub fn atom_count(&self) -> usize {
        match self {
            Recipe::Segment { n } | Recipe::Line { n, .. } | Recipe::LipschitzGraph { n, .. } | Recipe::Circle { n, .. } => *n,
            Recipe::Cantor4 { level } => 4usize.pow(*level),
            Recipe::Perturbed { base, .. } => base.atom_count(),
        }
    }

    /// Whether every atom lies on one straight line.
    pub fn is_collinear(&self) -> bool {
        match self {
            Recipe::Segment { .. } | Recipe::Line { .. } => true,
            Recipe::LipschitzGraph { slope, .. } => *slope == 0.0,
            Recipe::Cantor4 { level } => *level == 0,
            Recipe::Circle { n, .. } => *n <= 2,
            Recipe::Perturbed { base, amplitude } => *amplitude == 0.0 && base.is_collinear(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self {
            Recipe::Segment { n } if *n < 1 => bad("segment needs n >= 1"),
            Recipe::Line { n, length, angle } => {
                if *n < 1 || !(*length > 0.0) || !length.is_finite() || !angle.is_finite() {
                    bad("line needs n >= 1, finite angle and positive length")
                } else {
                    Ok(())
                }
            }
            Recipe::LipschitzGraph { n, slope } => {
                if *n < 1 || !slope.is_finite() || *slope < 0.0 {
                    bad("lipschitz_graph needs n >= 1 and a finite slope >= 0")
                } else {
                    Ok(())
                }
            }
            Recipe::Circle { n, radius } => {
                if *n < 1 || !(*radius > 0.0) || !radius.is_finite() {
                    bad("circle needs n >= 1 and a positive radius")
                } else {
                    Ok(())
                }
            }
            Recipe::Cantor4 { level } if *level > 8 => bad("cantor4 level must be <= 8"),
            Recipe::Perturbed { base, amplitude } => {
                if !(*amplitude >= 0.0) || !amplitude.is_finite() {
                    bad("perturbation amplitude must be finite and >= 0")
                } else {
                    base.validate()
                }
            }
            _ => Ok(()),
        }
    }

    fn atoms(&self, rng: &mut ChaCha8Rng) -> Vec<Atom<f64>> {
        let grid = |n: usize, i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        match self {
            Recipe::Segment { n } => {
                (0..*n).map(|i| Atom::new(Point2::new(grid(*n, i), 0.0), 1.0 / *n as f64)).collect()
            }
            Recipe::Line { n, angle, length } => {
                let (s, c) = angle.sin_cos();
                (0..*n)
                    .map(|i| {
                        let t = length * grid(*n, i);
                        Atom::new(Point2::new(t * c, t * s), length / *n as f64)
                    })
                    .collect()
            }
            Recipe::LipschitzGraph { n, slope } => {
                let xs: Vec<f64> = (0..*n).map(|i| grid(*n, i)).collect();
                let speed: Vec<f64> = xs.iter().map(|&x| (1.0 + graph_derivative(*slope, x).powi(2)).sqrt()).collect();
                let length = arclength(*slope);
                let total: f64 = speed.iter().sum();
                xs.iter()
                    .zip(&speed)
                    .map(|(&x, &v)| Atom::new(Point2::new(x, graph_profile(*slope, x)), length * v / total))
                    .collect()
            }
            Recipe::Circle { n, radius } => (0..*n)
                .map(|i| {
                    let (s, c) = (2.0 * PI * i as f64 / *n as f64).sin_cos();
                    Atom::new(Point2::new(radius * c, radius * s), 2.0 * PI * radius / *n as f64)
                })
                .collect(),
            Recipe::Cantor4 { level } => {
                let mut corners = vec![Point2::new(0.0, 0.0)];
                let mut side = 1.0;
                for _ in 0..*level {
                    let sub = side / 4.0;
                    let offset = side - sub;
                    corners = corners
                        .iter()
                        .flat_map(|&p| {
                            [(0.0, 0.0), (offset, 0.0), (0.0, offset), (offset, offset)]
                                .map(|(dx, dy)| Point2::new(p.x + dx, p.y + dy))
                        })
                        .collect();
                    side = sub;
                }
                let w = 0.25f64.powi(*level as i32);
                corners.into_iter().map(|p| Atom::new(Point2::new(p.x + side / 2.0, p.y + side / 2.0), w)).collect()
            }
            Recipe::Perturbed { base, amplitude } => {
                let mut atoms = base.atoms(rng);
                if *amplitude > 0.0 {
                    for a in &mut atoms {
                        a.pos.x += rng.gen_range(-amplitude..=*amplitude);
                        a.pos.y += rng.gen_range(-amplitude..=*amplitude);
                    }
                }
                atoms
            }
        }
    }
}

/// Arclength of the graph profile over `[0,1]` (composite Simpson rule, 4096 panels).
pub fn arclength(slope: f64) -> f64 {
    if slope == 0.0 {
        return 1.0;
    }
    let m = 4096;
    let h = 1.0 / m as f64;
    let f = |x: f64| (1.0 + graph_derivative(slope, x).powi(2)).sqrt();
    let mut s = f(0.0) + f(1.0);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Generates the measure described by `recipe`; deterministic for a fixed seed.
pub fn generate(recipe: &Recipe, seed: u64) -> Result<DiscreteMeasure<f64>> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DiscreteMeasure::with_default_scale(recipe.atoms(&mut rng))
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Segment { n } => write!(f, "segment:n={n}"),
            Recipe::Line { n, angle, length } => write!(f, "line:n={n},angle={angle},length={length}"),
            Recipe::LipschitzGraph { n, slope } => write!(f, "graph:n={n},slope={slope}"),
            Recipe::Circle { n, radius } => write!(f, "circle:n={n},radius={radius}"),
            Recipe::Cantor4 { level } => write!(f, "cantor4:level={level}"),
            Recipe::Perturbed { base, amplitude } => write!(f, "perturbed:amplitude={amplitude}/{base}"),
        }
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind == "perturbed" {
            let (head, base) = rest
                .split_once('/')
                .ok_or_else(|| Error::Parse("perturbed recipe needs '/<base>'".into()))?;
            let kv = KeyValues::parse(head)?;
            let amplitude = kv.f64("amplitude", None)?;
            kv.finish()?;
            return Ok(Recipe::Perturbed { base: Box::new(base.parse()?), amplitude });
        }
        let kv = KeyValues::parse(rest)?;
        let recipe = match kind {
            "segment" => Recipe::Segment { n: kv.usize("n", Some(100))? },
            "line" => Recipe::Line {
                n: kv.usize("n", Some(100))?,
                angle: kv.f64("angle", Some(PI / 2.0))?,
                length: kv.f64("length", Some(1.0))?,
            },
            "graph" | "lipschitz_graph" => {
                Recipe::LipschitzGraph { n: kv.usize("n", Some(128))?, slope: kv.f64("slope", Some(0.2))? }
            }
            "circle" => Recipe::Circle { n: kv.usize("n", Some(256))?, radius: kv.f64("radius", Some(1.0))? },
            "cantor4" => Recipe::Cantor4 { level: kv.usize("level", Some(3))? as u32 },
            other => return Err(Error::Parse(format!("unknown measure kind '{other}'"))),
        };
        kv.finish()?;
        Ok(recipe)
    }
}

struct KeyValues {
    pairs: Vec<(String, String)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl KeyValues {
    fn parse(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let used = std::cell::RefCell::new(vec![false; pairs.len()]);
        Ok(Self { pairs, used })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let i = self.pairs.iter().position(|(k, _)| k == key)?;
        self.used.borrow_mut()[i] = true;
        Some(&self.pairs[i].1)
    }

    fn f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.raw(key), default) {
            (Some(v), _) => v.parse().map_err(|_| Error::Parse(format!("bad number for {key}: '{v}'"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::Parse(format!("missing parameter {key}"))),
        }
    }

    fn usize(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match (self.raw(key), default) {
            (Some(v), _) => v.parse().map_err(|_| Error::Parse(format!("bad integer for {key}: '{v}'"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::Parse(format!("missing parameter {key}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.pairs.iter().zip(used.iter()).find(|(_, &u)| !u) {
            Some(((k, _), _)) => Err(Error::Parse(format!("unknown parameter '{k}'"))),
            None => Ok(()),
        }
    }
}
