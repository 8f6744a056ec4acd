//! Diversification applied to an existing graph, and the exact k-NN graph.

use std::time::Instant;

use rayon::prelude::*;

use super::{BuildReport, PhaseCounts};
use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::diversify::{pruning_ratio, CandidateList, Diversifier};
use crate::error::{Error, Result};
use crate::graph::FlatGraph;

/// Prunes every neighbor list of `g` with `nd` down to `cap_r`.
///
/// Surviving neighbors keep their original order. The returned ratio is
/// `1 - edges_after / edges_before`.
pub fn refine_with_nd<V: Vectors + ?Sized>(
    g: &FlatGraph,
    set: &V,
    nd: &Diversifier,
    cap_r: usize,
) -> Result<(FlatGraph, BuildReport, f64)> {
    nd.validate()?;
    if g.len() != set.len() {
        return Err(Error::param("graph and vector set sizes differ"));
    }
    let started = Instant::now();
    let results: Vec<(Vec<NodeId>, u64)> = (0..g.len() as NodeId)
        .into_par_iter()
        .map(|u| {
            let mut c = DistCounter::new();
            let xu = set.row(u);
            let entries = g
                .neighbors(u)
                .iter()
                .map(|&v| Candidate::new(v, c.squared(xu, set.row(v))))
                .collect();
            let kept = nd.prune(set, &CandidateList::from_unsorted(u, entries), cap_r, &mut c);
            let list = g.neighbors(u).iter().copied().filter(|v| kept.contains(v)).collect();
            (list, c.count())
        })
        .collect();
    let calcs = results.iter().map(|r| r.1).sum();
    let out = FlatGraph::from_lists(cap_r, results.into_iter().map(|r| r.0).collect())?;
    let ratio = pruning_ratio(g.edge_count(), out.edge_count());
    let phases = PhaseCounts { pruning: calcs, ..PhaseCounts::default() };
    Ok((out, BuildReport::finish(phases, started), ratio))
}

/// Exact `k`-NN graph (self excluded), lists ascending by distance then id.
/// Also returns the number of distance evaluations.
pub fn exact_knn_graph<V: Vectors + ?Sized>(set: &V, k: usize) -> Result<(FlatGraph, u64)> {
    let n = set.len();
    if k == 0 || k >= n {
        return Err(Error::param(format!("exact k-NN graph needs 1 <= k < n (k = {k}, n = {n})")));
    }
    let lists: Vec<Vec<NodeId>> = (0..n as NodeId)
        .into_par_iter()
        .map(|u| {
            let mut c = DistCounter::new();
            let xu = set.row(u);
            let mut all: Vec<Candidate> = (0..n as NodeId)
                .filter(|&v| v != u)
                .map(|v| Candidate::new(v, c.squared(xu, set.row(v))))
                .collect();
            all.select_nth_unstable(k - 1);
            all.truncate(k);
            all.sort_unstable();
            all.into_iter().map(|c| c.id).collect()
        })
        .collect();
    Ok((FlatGraph::from_lists(k, lists)?, (n * (n - 1)) as u64))
}
