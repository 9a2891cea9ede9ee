use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Report;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}, expected json or csv"))),
        }
    }
}

/// Numeric rows grouped into blocks, written as plot data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Each block becomes one gnuplot data set.
    pub blocks: Vec<Vec<Vec<f64>>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), blocks: vec![Vec::new()] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.blocks.last_mut().expect("table has a block").push(row);
    }

    /// Starts a new data set.
    pub fn next_block(&mut self) {
        if self.blocks.last().is_some_and(|b| !b.is_empty()) {
            self.blocks.push(Vec::new());
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.blocks.iter().flatten()
    }

    /// Comma-separated rows under a `#` header; blocks are separated by two blank lines so
    /// gnuplot addresses them with `index`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(","));
        let blocks: Vec<_> = self.blocks.iter().filter(|b| !b.is_empty()).collect();
        for (i, block) in blocks.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            for row in block.iter() {
                let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        out
    }
}

/// Shortest round-trip text, with exponent notation outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Report {
    /// Checks as a table: name, observed, relation, threshold, passed.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,observed,relation,threshold,passed\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.name,
                format_number(c.observed),
                c.relation.symbol(),
                format_number(c.threshold),
                c.passed
            );
        }
        out
    }

    /// Writes `<name>.json`, or `<name>-checks.csv` plus one `<name>-<table>.csv` per table.
    pub fn write(&self, dir: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let name = &self.name;
        let mut written = Vec::new();
        match format {
            OutputFormat::Json => {
                let path = dir.join(format!("{name}.json"));
                fs::write(&path, self.to_json())?;
                written.push(path);
            }
            OutputFormat::Csv => {
                let path = dir.join(format!("{name}-checks.csv"));
                fs::write(&path, self.checks_csv())?;
                written.push(path);
                for t in &self.tables {
                    let path = dir.join(format!("{name}-{}.csv", t.name));
                    fs::write(&path, t.to_csv())?;
                    written.push(path);
                }
            }
        }
        Ok(written)
    }
}
