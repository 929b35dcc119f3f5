//! Summation helpers shared by the catalog and the analyzers.

use rayon::prelude::*;

/// Fixed chunk length for reductions over per-object data. Partial sums are
/// always formed over these boundaries and combined in chunk order, so the
/// result does not depend on how many worker threads took part.
pub const REDUCTION_CHUNK: usize = 1 << 16;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// A bundle of compensated sums reduced together in one pass.
pub trait Accumulator: Send + Sized {
    fn merge(&mut self, other: &Self);
}

impl Accumulator for CompensatedSum {
    fn merge(&mut self, other: &Self) {
        CompensatedSum::merge(self, other)
    }
}

impl<const K: usize> Accumulator for [CompensatedSum; K] {
    fn merge(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Deterministic parallel reduction over `0..len`.
///
/// `chunk_fn` receives a half-open index range no longer than
/// [`REDUCTION_CHUNK`] and returns its partial accumulator. Partials are merged
/// sequentially in range order.
pub fn reduce_chunks<A, F>(len: usize, chunk_fn: F) -> A
where
    A: Accumulator + Default,
    F: Fn(std::ops::Range<usize>) -> A + Sync,
{
    let n_chunks = len.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * REDUCTION_CHUNK;
            chunk_fn(start..(start + REDUCTION_CHUNK).min(len))
        })
        .collect();
    let mut total = A::default();
    for p in &partials {
        total.merge(p);
    }
    total
}
