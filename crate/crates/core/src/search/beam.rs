//! Best-first beam search over a proximity graph.

use super::eval::QueryEval;
use crate::data::Vectors;
use crate::distance::{Candidate, NodeId};
use crate::graph::Adjacency;

/// Final state of one beam search.
#[derive(Clone, Debug, Default)]
pub struct BeamOutcome {
    /// The candidate set `C` at termination, ascending, at most `l` entries.
    pub frontier: Vec<Candidate>,
    /// Every expanded node, in expansion order.
    pub expanded: Vec<Candidate>,
}

impl BeamOutcome {
    /// `C ∪ V`, deduplicated and sorted: the pool a builder prunes into neighbors.
    pub fn pool(&self) -> Vec<Candidate> {
        let mut all: Vec<Candidate> = self.frontier.iter().chain(&self.expanded).copied().collect();
        all.sort_unstable();
        all.dedup_by_key(|c| c.id);
        all
    }
}

/// Runs the beam search from `seeds` (squared distances already evaluated).
///
/// `C` starts as the deduplicated seeds. Each step expands the closest
/// unexpanded member of `C`, adds its out-neighbors, and trims `C` to the `l`
/// closest. The search ends when every member of `C` has been expanded. A node
/// enters `C` at most once: after eviction it can never beat the `l`-th entry
/// again, because that bound only tightens.
pub fn beam_core<G, V>(
    graph: &G,
    eval: &mut QueryEval<'_, V>,
    seeds: &[Candidate],
    l: usize,
) -> BeamOutcome
where
    G: Adjacency + ?Sized,
    V: Vectors + ?Sized,
{
    let l = l.max(1);
    let mut frontier: Vec<(Candidate, bool)> = Vec::with_capacity(l + 1);
    for &s in seeds {
        if eval.mark_seen(s.id) {
            frontier.push((s, false));
        }
    }
    frontier.sort_unstable_by_key(|c| c.0);
    frontier.truncate(l);

    let mut expanded = Vec::new();
    let mut neighbors: Vec<NodeId> = Vec::new();
    let mut cursor = 0usize;
    loop {
        while cursor < frontier.len() && frontier[cursor].1 {
            cursor += 1;
        }
        if cursor >= frontier.len() {
            break;
        }
        frontier[cursor].1 = true;
        let p = frontier[cursor].0;
        expanded.push(p);
        graph.copy_neighbors(p.id, &mut neighbors);
        for &nb in &neighbors {
            if !eval.mark_seen(nb) {
                continue;
            }
            let cand = Candidate::new(nb, eval.node(nb));
            if frontier.len() >= l && cand >= frontier[l - 1].0 {
                continue;
            }
            let pos = frontier.partition_point(|(c, _)| *c < cand);
            frontier.insert(pos, (cand, false));
            frontier.truncate(l);
            cursor = cursor.min(pos);
        }
    }
    BeamOutcome {
        frontier: frontier.into_iter().map(|(c, _)| c).collect(),
        expanded,
    }
}
