use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Atom, DiscreteMeasure, Point2};
use crate::error::Result;

/// On-disk measure layout: `{"scale": s, "atoms": [{"x":…, "y":…, "w":…}, …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub scale: f64,
    pub atoms: Vec<AtomRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl From<&DiscreteMeasure<f64>> for MeasureFile {
    fn from(m: &DiscreteMeasure<f64>) -> Self {
        MeasureFile {
            scale: m.scale(),
            atoms: m.atoms().iter().map(|a| AtomRecord { x: a.pos.x, y: a.pos.y, w: a.weight }).collect(),
        }
    }
}

impl TryFrom<MeasureFile> for DiscreteMeasure<f64> {
    type Error = crate::error::Error;

    fn try_from(f: MeasureFile) -> Result<Self> {
        DiscreteMeasure::new(f.atoms.iter().map(|a| Atom::new(Point2::new(a.x, a.y), a.w)).collect(), f.scale)
    }
}

impl DiscreteMeasure<f64> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureFile::from(self)).expect("finite measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: MeasureFile = serde_json::from_str(s)?;
        f.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
