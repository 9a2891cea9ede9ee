//! Deterministic summation.
//!
//! Parallel sums are split into fixed-size chunks of the outer index. Each chunk is
//! accumulated with Neumaier compensation and the chunk partials are combined in
//! chunk order, so the result does not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Default number of outer indices per chunk.
pub const DEFAULT_CHUNK: usize = 8;

/// Compensated accumulator (Kahan–Babuška–Neumaier).
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Compensated<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Summation order used by the triple and double sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Reduction {
    /// Plain left-to-right accumulation in index order, single threaded.
    Sequential,
    /// Fixed chunks of the outer index, compensated within chunks, ordered combination.
    Chunked { chunk: usize },
}

impl Default for Reduction {
    fn default() -> Self {
        Reduction::Chunked { chunk: DEFAULT_CHUNK }
    }
}

impl Reduction {
    /// Sums `f(i)` for `i in 0..n` under this reduction order.
    pub fn sum<T, F>(self, n: usize, f: F) -> T
    where
        T: Real,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.fold(n, |i, acc: &mut Accumulator<T>| {
            acc.add(f(i));
            0
        })
        .0
    }

    /// Runs `f(i, acc)` for every outer index `i`, where `f` adds its terms to `acc`
    /// and returns how many terms it added.
    ///
    /// `Sequential` threads one plain running accumulator through every index, which is
    /// exactly a naive nested loop. `Chunked` gives each chunk its own compensated
    /// accumulator and combines the chunk values in chunk order.
    pub fn fold<T, F>(self, n: usize, f: F) -> (T, u64)
    where
        T: Real,
        F: Fn(usize, &mut Accumulator<T>) -> u64 + Sync + Send,
    {
        match self {
            Reduction::Sequential => {
                let mut acc = Accumulator::Plain(T::zero());
                let mut count = 0;
                for i in 0..n {
                    count += f(i, &mut acc);
                }
                (acc.value(), count)
            }
            Reduction::Chunked { chunk } => {
                let chunk = chunk.max(1);
                let n_chunks = n.div_ceil(chunk);
                let partials: Vec<(T, u64)> = (0..n_chunks)
                    .into_par_iter()
                    .map(|c| {
                        let mut acc = Accumulator::Compensated(Compensated::new());
                        let mut count = 0;
                        for i in c * chunk..((c + 1) * chunk).min(n) {
                            count += f(i, &mut acc);
                        }
                        (acc.value(), count)
                    })
                    .collect();
                let mut acc = Compensated::new();
                let mut count = 0;
                for (p, c) in partials {
                    acc.add(p);
                    count += c;
                }
                (acc.value(), count)
            }
        }
    }

    /// An accumulator for inner sums matching this reduction order.
    pub fn inner<T: Real>(self) -> Accumulator<T> {
        match self {
            Reduction::Sequential => Accumulator::Plain(T::zero()),
            Reduction::Chunked { .. } => Accumulator::Compensated(Compensated::new()),
        }
    }
}

/// Inner-loop accumulator selected by a [`Reduction`].
#[derive(Clone, Copy, Debug)]
pub enum Accumulator<T> {
    Plain(T),
    Compensated(Compensated<T>),
}

impl<T: Real> Accumulator<T> {
    #[inline]
    pub fn add(&mut self, v: T) {
        match self {
            Accumulator::Plain(s) => *s += v,
            Accumulator::Compensated(c) => c.add(v),
        }
    }

    #[inline]
    pub fn value(&self) -> T {
        match self {
            Accumulator::Plain(s) => *s,
            Accumulator::Compensated(c) => c.value(),
        }
    }
}

/// Deterministic compensated sum of a slice, in order.
pub fn ordered_sum<T: Real>(values: &[T]) -> T {
    let mut acc = Compensated::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut c = Compensated::<f64>::new();
        c.add(1.0);
        for _ in 0..10 {
            c.add(1e-16);
        }
        c.add(-1.0);
        assert!((c.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn chunked_sum_independent_of_pool_size() {
        let f = |i: usize| 1.0 / (1.0 + i as f64).powi(2);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r = Reduction::Chunked { chunk: 7 };
        let a: f64 = one.install(|| r.sum(10_000, f));
        let b: f64 = four.install(|| r.sum(10_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sequential_is_plain_loop() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut naive = 0.0;
        for x in &xs {
            naive += x;
        }
        let s: f64 = Reduction::Sequential.sum(xs.len(), |i| xs[i]);
        assert_eq!(s.to_bits(), naive.to_bits());
    }
}
