//! NN-Descent: refines a random k-regular graph by joining neighbors of neighbors.

use std::time::Instant;

use rand::seq::index;

use super::{BuildReport, PhaseCounts};
use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};
use crate::graph::FlatGraph;
use crate::rng::{stream, Domain};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnDescentParams {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once an iteration accepts fewer than `delta * n * k` updates.
    pub delta: f64,
    pub seed: u64,
}

impl NnDescentParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, max_iters: 10, delta: 0.001, seed }
    }
}

/// One neighbor list: ascending, at most `k`, each entry flagged new until joined once.
struct Pool {
    entries: Vec<(Candidate, bool)>,
}

impl Pool {
    fn offer(&mut self, c: Candidate, k: usize) -> bool {
        if self.entries.len() >= k && c >= self.entries[k - 1].0 {
            return false;
        }
        if self.entries.iter().any(|(e, _)| e.id == c.id) {
            return false;
        }
        let at = self.entries.partition_point(|(e, _)| *e < c);
        self.entries.insert(at, (c, true));
        self.entries.truncate(k);
        true
    }
}

fn initial_pools<V: Vectors + ?Sized>(set: &V, k: usize, seed: u64, counter: &mut DistCounter) -> Vec<Pool> {
    let n = set.len();
    (0..n)
        .map(|u| {
            let mut rng = stream(seed, Domain::NnDescent, u as u64);
            let mut entries: Vec<(Candidate, bool)> = index::sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|x| {
                    let v = if x >= u { x + 1 } else { x } as NodeId;
                    (Candidate::new(v, counter.squared(set.row(u as NodeId), set.row(v))), true)
                })
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            Pool { entries }
        })
        .collect()
}

fn to_graph(pools: &[Pool], k: usize) -> Result<FlatGraph> {
    FlatGraph::from_lists(
        k,
        pools
            .iter()
            .map(|p| p.entries.iter().map(|(c, _)| c.id).collect())
            .collect(),
    )
}

/// Builds an approximate `k`-NN graph. Lists are ascending by distance.
///
/// Each iteration joins every pair drawn from a node's forward and reverse
/// neighbors where at least one side is new since the last iteration; reverse
/// lists are capped at `k` per node.
pub fn nndescent<V: Vectors + ?Sized>(set: &V, p: &NnDescentParams) -> Result<(FlatGraph, BuildReport)> {
    let n = set.len();
    if p.k == 0 || p.k >= n {
        return Err(Error::param(format!("NN-Descent needs 1 <= k < n (k = {}, n = {n})", p.k)));
    }
    if p.max_iters == 0 || !(0.0..1.0).contains(&p.delta) {
        return Err(Error::param("NN-Descent needs max_iters >= 1 and 0 <= delta < 1"));
    }
    let started = Instant::now();
    let k = p.k;
    let mut counter = DistCounter::new();
    let mut pools = initial_pools(set, k, p.seed, &mut counter);
    let mut updates_per_iter = Vec::new();
    let threshold = p.delta * (n * k) as f64;

    for _ in 0..p.max_iters {
        let mut new_fwd: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut old_fwd: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, pool) in pools.iter_mut().enumerate() {
            for (c, fresh) in &mut pool.entries {
                if *fresh {
                    new_fwd[u].push(c.id);
                    *fresh = false;
                } else {
                    old_fwd[u].push(c.id);
                }
            }
        }
        let mut new_rev: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut old_rev: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &new_fwd[u] {
                if new_rev[v as usize].len() < k {
                    new_rev[v as usize].push(u as NodeId);
                }
            }
            for &v in &old_fwd[u] {
                if old_rev[v as usize].len() < k {
                    old_rev[v as usize].push(u as NodeId);
                }
            }
        }

        let mut updates = 0u64;
        for u in 0..n {
            let mut fresh: Vec<NodeId> = new_fwd[u].iter().chain(&new_rev[u]).copied().collect();
            fresh.sort_unstable();
            fresh.dedup();
            let mut stale: Vec<NodeId> = old_fwd[u].iter().chain(&old_rev[u]).copied().collect();
            stale.sort_unstable();
            stale.dedup();
            stale.retain(|x| fresh.binary_search(x).is_err());
            for (i, &a) in fresh.iter().enumerate() {
                for &b in fresh[i + 1..].iter().chain(&stale) {
                    if a == b {
                        continue;
                    }
                    let d = counter.squared(set.row(a), set.row(b));
                    updates += pools[a as usize].offer(Candidate::new(b, d), k) as u64;
                    updates += pools[b as usize].offer(Candidate::new(a, d), k) as u64;
                }
            }
        }
        updates_per_iter.push(updates);
        if (updates as f64) < threshold {
            break;
        }
    }

    let graph = to_graph(&pools, k)?;
    let phases = PhaseCounts { search: counter.count(), ..PhaseCounts::default() };
    let mut report = BuildReport::finish(phases, started);
    report.iteration_updates = updates_per_iter;
    Ok((graph, report))
}
