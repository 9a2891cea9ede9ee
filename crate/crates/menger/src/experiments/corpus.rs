use std::f64::consts::FRAC_PI_2;

use crate::measure::Recipe;

/// A named recipe.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub recipe: Recipe,
}

fn entry(recipe: Recipe) -> CorpusEntry {
    CorpusEntry { name: recipe.to_string(), recipe }
}

fn graph(n: usize, slope: f64) -> Recipe {
    Recipe::LipschitzGraph { n, slope }
}

fn perturbed(base: Recipe, amplitude: f64) -> Recipe {
    Recipe::Perturbed { base: Box::new(base), amplitude }
}

/// Segment, graphs of slope 0 to 0.3, circle, vertical and tilted lines, two perturbed variants,
/// all with `n` atoms, plus the Cantor levels `1..=cantor_max`.
pub fn corpus(n: usize, cantor_max: u32) -> Vec<CorpusEntry> {
    let mut out = vec![entry(Recipe::Segment { n })];
    for slope in [0.0, 0.1, 0.2, 0.3] {
        out.push(entry(graph(n, slope)));
    }
    out.push(entry(Recipe::Circle { n, radius: 0.5 }));
    for level in 1..=cantor_max {
        out.push(entry(Recipe::Cantor4 { level }));
    }
    out.push(entry(Recipe::Line { n, angle: FRAC_PI_2, length: 1.0 }));
    out.push(entry(Recipe::Line { n, angle: 0.7, length: 1.0 }));
    out.push(entry(perturbed(Recipe::Segment { n }, 0.1 / n as f64)));
    out.push(entry(perturbed(graph(n, 0.2), 0.1 / n as f64)));
    out
}

/// The corpus entries supported on a straight line.
pub fn line_corpus(n: usize) -> Vec<CorpusEntry> {
    corpus(n, 0).into_iter().filter(|e| e.recipe.is_collinear()).collect()
}

pub fn recipes(entries: &[CorpusEntry]) -> Vec<Recipe> {
    entries.iter().map(|e| e.recipe.clone()).collect()
}
