//! Reachability check and repair from a fixed entry node.

use super::FlatGraph;
use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::diversify::{CandidateList, Diversifier};
use crate::error::{Error, Result};

/// Marks every node reachable from `entry` along directed edges (iterative DFS).
pub fn reachable_from(g: &FlatGraph, entry: NodeId) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    let mut parent = vec![NO_PARENT; g.len()];
    mark_from(g, entry, &mut seen, &mut parent);
    seen
}

const NO_PARENT: NodeId = NodeId::MAX;

/// DFS from `start` over unseen nodes, recording the spanning-tree parent of each.
fn mark_from(g: &FlatGraph, start: NodeId, seen: &mut [bool], parent: &mut [NodeId]) -> Vec<NodeId> {
    let mut newly = Vec::new();
    if seen[start as usize] {
        return newly;
    }
    let mut stack = vec![start];
    seen[start as usize] = true;
    while let Some(u) = stack.pop() {
        newly.push(u);
        for &v in g.neighbors(u) {
            if !seen[v as usize] {
                seen[v as usize] = true;
                parent[v as usize] = u;
                stack.push(v);
            }
        }
    }
    newly
}

/// Makes every node reachable from `entry`, returning the number of edges added.
///
/// Unreachable nodes are handled in ascending id order. Each `u` is linked from
/// its nearest reachable node `v`. A full `v` has its list plus `u` re-pruned with
/// `nd`. The result is accepted only if it keeps `u` and every spanning-tree
/// edge out of `v`. Otherwise `u` is linked from the nearest reachable node with
/// spare degree, or else one with a non-tree edge to give up; one always exists
/// because a spanning tree uses fewer edges than the reachable nodes can hold.
/// The reverse edge `u -> v` is added when `u` has room.
pub fn ensure_connected<V: Vectors + ?Sized>(
    g: &mut FlatGraph,
    entry: NodeId,
    set: &V,
    nd: &Diversifier,
    counter: &mut DistCounter,
) -> Result<usize> {
    if entry as usize >= g.len() {
        return Err(Error::param(format!("entry {entry} out of range")));
    }
    if set.len() != g.len() {
        return Err(Error::param("graph and vector set sizes differ"));
    }
    let n = g.len();
    let mut seen = vec![false; n];
    let mut parent = vec![NO_PARENT; n];
    let mut reachable = mark_from(g, entry, &mut seen, &mut parent);
    let mut added = 0usize;
    for u in 0..n as NodeId {
        if seen[u as usize] {
            continue;
        }
        let xu = set.row(u);
        let mut by_dist: Vec<Candidate> = reachable
            .iter()
            .map(|&r| Candidate::new(r, counter.squared(xu, set.row(r))))
            .collect();
        by_dist.sort_unstable();
        let v = by_dist[0].id;
        let linked = if g.degree(v) < g.cap() {
            g.add_edge(v, u)?;
            true
        } else {
            try_reprune(g, v, u, set, nd, &parent, counter)?
        };
        let from = if linked {
            v
        } else {
            let w = by_dist
                .iter()
                .map(|c| c.id)
                .find(|&w| g.degree(w) < g.cap() || g.neighbors(w).iter().any(|&x| parent[x as usize] != w))
                .ok_or_else(|| Error::Graph("no reachable node can take another edge".into()))?;
            if g.degree(w) >= g.cap() {
                let drop = *g
                    .neighbors(w)
                    .iter()
                    .rev()
                    .find(|&&x| parent[x as usize] != w)
                    .expect("checked above");
                let list = g.neighbors(w).iter().copied().filter(|&x| x != drop).collect();
                g.set_neighbors(w, list)?;
            }
            g.add_edge(w, u)?;
            w
        };
        added += 1;
        if g.degree(u) < g.cap() && g.add_edge(u, from)? {
            added += 1;
        }
        parent[u as usize] = from;
        reachable.extend(mark_from(g, u, &mut seen, &mut parent));
    }
    debug_assert!(reachable_from(g, entry).iter().all(|&r| r));
    Ok(added)
}

/// Re-prunes the full list of `v` with `u` added. Applies and returns true only
/// when `u` survives and no spanning-tree child of `v` is dropped.
fn try_reprune<V: Vectors + ?Sized>(
    g: &mut FlatGraph,
    v: NodeId,
    u: NodeId,
    set: &V,
    nd: &Diversifier,
    parent: &[NodeId],
    counter: &mut DistCounter,
) -> Result<bool> {
    let xv = set.row(v);
    let entries = g
        .neighbors(v)
        .iter()
        .chain(std::iter::once(&u))
        .map(|&w| Candidate::new(w, counter.squared(xv, set.row(w))))
        .collect();
    let list = CandidateList::from_unsorted(v, entries);
    let kept = nd.prune(set, &list, g.cap(), counter);
    let cuts_tree = g
        .neighbors(v)
        .iter()
        .any(|w| parent[*w as usize] == v && !kept.contains(w));
    if !kept.contains(&u) || cuts_tree {
        return Ok(false);
    }
    g.set_neighbors(v, kept)?;
    Ok(true)
}
