//! Query pipeline: seed selection, beam search, and partition fan-out.

mod beam;
mod eval;

pub use beam::{beam_core, BeamOutcome};
pub use eval::{QueryEval, Scratch};

use rayon::prelude::*;

use crate::data::{SubsetView, Vectors};
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};
use crate::graph::{Adjacency, FlatGraph, Index, PartitionMode, PartitionedIndex};
use crate::seeds::SeedIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchParams {
    pub k: usize,
    pub beam_l: usize,
    /// Seeds requested from multi-seed strategies (KD, KM, KS).
    pub seed_count: usize,
    /// Partitions probed by a separate-mode partitioned index.
    pub nprobe: usize,
    /// Probe partitions concurrently within one query.
    pub parallel_probes: bool,
}

impl SearchParams {
    /// `seed_count` defaults to the beam width.
    pub fn new(k: usize, beam_l: usize) -> Self {
        Self {
            k,
            beam_l,
            seed_count: beam_l,
            nprobe: 1,
            parallel_probes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.beam_l < self.k {
            return Err(Error::param(format!(
                "need beam width >= k >= 1 (k = {}, l = {})",
                self.k, self.beam_l
            )));
        }
        if self.nprobe == 0 || self.seed_count == 0 {
            return Err(Error::param("nprobe and seed count must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryResult {
    /// Nearest found, ascending, with true (not squared) distances.
    pub answers: Vec<Candidate>,
    /// Every distance evaluated for this query, including `aux_calcs`.
    pub distance_calcs: u64,
    /// Evaluations against non-row vectors (tree or partition centroids).
    pub aux_calcs: u64,
    /// Nodes expanded by the beam.
    pub visited: usize,
}

impl QueryResult {
    pub fn ids(&self) -> Vec<NodeId> {
        self.answers.iter().map(|c| c.id).collect()
    }
}

/// Beam search from pre-evaluated seeds, returning the `k` closest of the final beam.
///
/// Seed distances are re-read through `eval`, so seeds it already evaluated cost nothing.
pub fn beam_search<G, V>(
    graph: &G,
    eval: &mut QueryEval<'_, V>,
    seeds: &[Candidate],
    k: usize,
    l: usize,
) -> Result<QueryResult>
where
    G: Adjacency + ?Sized,
    V: Vectors + ?Sized,
{
    if seeds.is_empty() {
        return Err(Error::param("beam search needs at least one seed"));
    }
    if k == 0 || l < k {
        return Err(Error::param(format!("need l >= k >= 1 (k = {k}, l = {l})")));
    }
    if graph.node_count() != eval.set().len() {
        return Err(Error::param("graph and vector set sizes differ"));
    }
    if let Some(bad) = seeds.iter().find(|s| s.id as usize >= graph.node_count()) {
        return Err(Error::param(format!("seed {} out of range", bad.id)));
    }
    let seeds: Vec<Candidate> = seeds.iter().map(|s| Candidate::new(s.id, eval.node(s.id))).collect();
    let outcome = beam_core(graph, eval, &seeds, l);
    Ok(finish(&outcome, k, eval))
}

fn finish<V: Vectors + ?Sized>(outcome: &BeamOutcome, k: usize, eval: &QueryEval<'_, V>) -> QueryResult {
    QueryResult {
        answers: outcome
            .frontier
            .iter()
            .take(k)
            .map(|c| Candidate::new(c.id, c.dist.sqrt()))
            .collect(),
        distance_calcs: eval.counter().count(),
        aux_calcs: eval.aux_count(),
        visited: outcome.expanded.len(),
    }
}

/// Read-only query engine over one index, its seed structure, and its vectors.
pub struct Searcher<'a, V: Vectors + ?Sized> {
    set: &'a V,
    index: &'a Index,
    seeds: &'a SeedIndex,
    merged: Option<FlatGraph>,
}

impl<'a, V: Vectors + ?Sized> Searcher<'a, V> {
    pub fn new(set: &'a V, index: &'a Index, seeds: &'a SeedIndex) -> Result<Self> {
        if index.len() != set.len() {
            return Err(Error::param(format!(
                "index has {} nodes but the vector set has {}",
                index.len(),
                set.len()
            )));
        }
        let mut merged = None;
        match index {
            Index::Flat(_) if matches!(seeds, SeedIndex::Sn) => {
                return Err(Error::param("SN seeds need a layered index"));
            }
            Index::Partitioned(p) => {
                p.validate(set.len(), set.dim())?;
                if p.mode == PartitionMode::Merged {
                    if matches!(seeds, SeedIndex::Sn) {
                        return Err(Error::param("SN seeds need a layered index"));
                    }
                    merged = Some(p.merged_graph()?);
                }
            }
            _ => {}
        }
        Ok(Self { set, index, seeds, merged })
    }

    pub fn set(&self) -> &'a V {
        self.set
    }

    /// Answers one query. `query_index` selects the KS draw.
    pub fn search(
        &self,
        q: &[f32],
        query_index: u64,
        p: &SearchParams,
        scratch: &mut Scratch,
    ) -> Result<QueryResult> {
        p.validate()?;
        if q.len() != self.set.dim() {
            return Err(Error::DimensionMismatch { left: q.len(), right: self.set.dim() });
        }
        let k = p.k.min(self.set.len());
        match (self.index, &self.merged) {
            (_, Some(g)) => self.flat(g, q, query_index, p, k, scratch),
            (Index::Flat(g), None) => self.flat(g, q, query_index, p, k, scratch),
            (Index::Layered(layers), None) => {
                let mut eval = QueryEval::new(self.set, q, scratch);
                let seeds = self.seeds.seeds(&mut eval, p.seed_count, query_index, Some(layers))?;
                let outcome = beam_core(layers.base(), &mut eval, &seeds, p.beam_l);
                Ok(finish(&outcome, k, &eval))
            }
            (Index::Partitioned(parts), None) => self.separate(parts, q, p, k, scratch),
        }
    }

    fn flat(
        &self,
        g: &FlatGraph,
        q: &[f32],
        query_index: u64,
        p: &SearchParams,
        k: usize,
        scratch: &mut Scratch,
    ) -> Result<QueryResult> {
        let mut eval = QueryEval::new(self.set, q, scratch);
        let seeds = self.seeds.seeds(&mut eval, p.seed_count, query_index, None)?;
        let outcome = beam_core(g, &mut eval, &seeds, p.beam_l);
        Ok(finish(&outcome, k, &eval))
    }

    /// Ranks partitions by centroid distance and beam-searches the `nprobe` nearest
    /// from their entries, merging into one global top-k.
    fn separate(
        &self,
        parts: &PartitionedIndex,
        q: &[f32],
        p: &SearchParams,
        k: usize,
        scratch: &mut Scratch,
    ) -> Result<QueryResult> {
        let mut ranking = DistCounter::new();
        let mut order: Vec<Candidate> = parts
            .partitions
            .iter()
            .enumerate()
            .map(|(i, part)| Candidate::new(i as NodeId, ranking.squared(q, &part.centroid)))
            .collect();
        order.sort_unstable();
        order.truncate(p.nprobe);

        let probe = |pi: usize, scratch: &mut Scratch| -> (Vec<Candidate>, u64, usize) {
            let part = &parts.partitions[pi];
            let view = SubsetView::new(self.set, &part.members);
            let mut eval = QueryEval::new(&view, q, scratch);
            let entry = part.entry();
            let seed = Candidate::new(entry, eval.node(entry));
            let outcome = beam_core(&part.graph, &mut eval, &[seed], p.beam_l);
            let found = outcome
                .frontier
                .iter()
                .take(k)
                .map(|c| Candidate::new(part.members[c.id as usize], c.dist))
                .collect();
            (found, eval.counter().count(), outcome.expanded.len())
        };
        let results: Vec<(Vec<Candidate>, u64, usize)> = if p.parallel_probes && order.len() > 1 {
            order
                .par_iter()
                .map(|c| probe(c.id as usize, &mut Scratch::default()))
                .collect()
        } else {
            order.iter().map(|c| probe(c.id as usize, scratch)).collect()
        };

        let mut merged: Vec<Candidate> = Vec::new();
        let mut calcs = ranking.count();
        let mut visited = 0;
        for (found, c, v) in results {
            merged.extend(found);
            calcs += c;
            visited += v;
        }
        merged.sort_unstable();
        merged.truncate(k);
        Ok(QueryResult {
            answers: merged.into_iter().map(|c| Candidate::new(c.id, c.dist.sqrt())).collect(),
            distance_calcs: calcs,
            aux_calcs: ranking.count(),
            visited,
        })
    }
}

/// One-shot form of [`Searcher::search`].
pub fn search_index<V: Vectors + ?Sized>(
    index: &Index,
    seeds: &SeedIndex,
    set: &V,
    q: &[f32],
    query_index: u64,
    p: &SearchParams,
) -> Result<QueryResult> {
    let mut scratch = Scratch::new(set.len());
    Searcher::new(set, index, seeds)?.search(q, query_index, p, &mut scratch)
}

/// Fraction of the true `k` nearest ids (the first `k` of `truth`) present in `result`.
pub fn recall(result: &[NodeId], truth: impl IntoIterator<Item = NodeId>, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let top: Vec<NodeId> = truth.into_iter().take(k).collect();
    let hits = result.iter().take(k).filter(|id| top.contains(id)).count();
    hits as f64 / k as f64
}
