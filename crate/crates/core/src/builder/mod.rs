//! Graph construction: incremental insertion, NN-Descent, diversification of an
//! existing graph, and divide-and-conquer over balanced partitions.

mod dc;
mod ii;
mod locked;
mod nndescent;
mod refine;

pub use dc::{balanced_partition, build_dc};
pub use ii::build_ii;
pub use nndescent::{nndescent, NnDescentParams};
pub use refine::{exact_knn_graph, refine_with_nd};

use std::time::Instant;

use crate::diversify::Diversifier;
use crate::error::{Error, Result};
use crate::graph::Index;
use crate::seeds::{SeedIndex, SeedParams, SeedStrategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildParams {
    /// Maximum out-degree `R`.
    pub cap_r: usize,
    /// Beam width used to collect insertion candidates.
    pub beam_l: usize,
    /// Layer-assignment parameter for SN layers.
    pub m: f64,
    pub nd: Diversifier,
    pub ss: SeedStrategy,
    /// Seeds drawn per insertion by multi-seed strategies; `None` means `beam_l`.
    pub seed_count: Option<usize>,
    /// Largest partition produced by divide-and-conquer.
    pub leaf_size: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    /// One worker, fixed order: builds are a pure function of (set, params).
    pub deterministic: bool,
    /// Insert in a seeded random order instead of ascending id.
    pub shuffle: bool,
    /// Run the reachability repair from the entry after insertion.
    pub connect: bool,
    pub seed_params: SeedParams,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            cap_r: 60,
            beam_l: 800,
            m: 16.0,
            nd: Diversifier::Rnd,
            ss: SeedStrategy::Ks,
            seed_count: None,
            leaf_size: 10_000,
            seed: 0,
            threads: 0,
            deterministic: false,
            shuffle: false,
            connect: false,
            seed_params: SeedParams::default(),
        }
    }
}

impl BuildParams {
    pub fn validate(&self) -> Result<()> {
        self.nd.validate()?;
        if self.cap_r == 0 {
            return Err(Error::param("cap_R must be >= 1"));
        }
        if self.beam_l < self.cap_r {
            return Err(Error::param(format!(
                "build beam width {} must be >= cap_R {}",
                self.beam_l, self.cap_r
            )));
        }
        if self.ss == SeedStrategy::Sn && !(self.m > 2.0) {
            return Err(Error::param(format!("SN layers need M > 2, got {}", self.m)));
        }
        if self.seed_count == Some(0) {
            return Err(Error::param("seed count must be >= 1"));
        }
        if self.leaf_size < 2 {
            return Err(Error::param("leaf size must be >= 2"));
        }
        Ok(())
    }

    pub(crate) fn seed_count(&self) -> usize {
        self.seed_count.unwrap_or(self.beam_l)
    }

    pub(crate) fn seed_params(&self) -> SeedParams {
        SeedParams { seed: self.seed, ..self.seed_params }
    }

    /// Runs `f` on a pool of `threads` workers, or the global pool when 0.
    pub(crate) fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        if self.threads == 0 || self.deterministic {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::param(e.to_string()))?;
        Ok(pool.install(f))
    }
}

/// Distance evaluations per build phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseCounts {
    /// Building seed structures and choosing per-insertion seeds.
    pub seeding: u64,
    /// Candidate collection: beam searches, or NN-Descent joins.
    pub search: u64,
    /// Diversification of new and overflowing neighbor lists.
    pub pruning: u64,
    /// Reachability repair and the medoid it starts from.
    pub repair: u64,
    /// Recursive balanced 2-means.
    pub partition: u64,
}

impl PhaseCounts {
    pub fn total(&self) -> u64 {
        self.seeding + self.search + self.pruning + self.repair + self.partition
    }

    pub fn add(&mut self, other: &PhaseCounts) {
        self.seeding += other.seeding;
        self.search += other.search;
        self.pruning += other.pruning;
        self.repair += other.repair;
        self.partition += other.partition;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildReport {
    /// Sum of every phase count.
    pub distance_calcs: u64,
    pub wall_time: f64,
    pub phases: PhaseCounts,
    /// Accepted updates per NN-Descent iteration.
    pub iteration_updates: Vec<u64>,
    /// Edges added by reachability repair.
    pub repair_edges: usize,
}

impl BuildReport {
    pub(crate) fn finish(phases: PhaseCounts, started: Instant) -> Self {
        Self {
            distance_calcs: phases.total(),
            wall_time: started.elapsed().as_secs_f64(),
            phases,
            ..Self::default()
        }
    }
}

/// An index with the seed structure used to search it.
#[derive(Clone, Debug, PartialEq)]
pub struct Built {
    pub index: Index,
    pub seeds: SeedIndex,
    pub report: BuildReport,
}
