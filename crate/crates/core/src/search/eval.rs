//! Per-query distance evaluation with memoization.

use crate::data::Vectors;
use crate::distance::{DistCounter, NodeId};

/// Reusable per-worker buffers: generation-stamped "evaluated" and "seen" marks
/// plus cached distances. Advancing a generation resets its marks in O(1).
#[derive(Debug, Default)]
pub struct Scratch {
    evaluated: Vec<u32>,
    seen: Vec<u32>,
    dist: Vec<f32>,
    generation: u32,
    seen_generation: u32,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Self {
            evaluated: vec![0; n],
            seen: vec![0; n],
            dist: vec![0.0; n],
            generation: 0,
            seen_generation: 0,
        }
    }

    fn begin(&mut self, n: usize) {
        if self.evaluated.len() < n {
            self.evaluated.resize(n, 0);
            self.seen.resize(n, 0);
            self.dist.resize(n, 0.0);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.evaluated.fill(0);
            self.generation = 1;
        }
        self.next_seen();
    }

    fn next_seen(&mut self) {
        self.seen_generation = self.seen_generation.wrapping_add(1);
        if self.seen_generation == 0 {
            self.seen.fill(0);
            self.seen_generation = 1;
        }
    }
}

/// Distances from one query to rows of a vector collection, each row evaluated
/// at most once. `counter` therefore equals the number of distinct rows touched
/// plus any auxiliary vectors (tree or partition centroids).
pub struct QueryEval<'a, V: Vectors + ?Sized> {
    set: &'a V,
    query: &'a [f32],
    scratch: &'a mut Scratch,
    counter: DistCounter,
    aux: u64,
}

impl<'a, V: Vectors + ?Sized> QueryEval<'a, V> {
    pub fn new(set: &'a V, query: &'a [f32], scratch: &'a mut Scratch) -> Self {
        scratch.begin(set.len());
        Self {
            set,
            query,
            scratch,
            counter: DistCounter::new(),
            aux: 0,
        }
    }

    pub fn set(&self) -> &'a V {
        self.set
    }

    pub fn query(&self) -> &'a [f32] {
        self.query
    }

    /// Squared distance from the query to row `id`.
    #[inline]
    pub fn node(&mut self, id: NodeId) -> f32 {
        let i = id as usize;
        if self.scratch.evaluated[i] == self.scratch.generation {
            return self.scratch.dist[i];
        }
        let d = self.counter.squared(self.query, self.set.row(id));
        self.scratch.evaluated[i] = self.scratch.generation;
        self.scratch.dist[i] = d;
        d
    }

    /// Squared distance to a vector that is not a row (never memoized).
    pub fn aux(&mut self, v: &[f32]) -> f32 {
        self.aux += 1;
        self.counter.squared(self.query, v)
    }

    /// Marks `id` as having entered the beam; returns false if it already had.
    #[inline]
    pub fn mark_seen(&mut self, id: NodeId) -> bool {
        let generation = self.scratch.seen_generation;
        let slot = &mut self.scratch.seen[id as usize];
        if *slot == generation {
            false
        } else {
            *slot = generation;
            true
        }
    }

    /// Clears the "seen" marks while keeping memoized distances, so a second
    /// beam (e.g. on another layer) can run for the same query.
    pub fn reset_seen(&mut self) {
        self.scratch.next_seen();
    }

    pub fn counter(&self) -> DistCounter {
        self.counter
    }

    pub fn aux_count(&self) -> u64 {
        self.aux
    }
}
