//! Divide and conquer: balanced partitions, one insertion-built graph each.

use std::time::Instant;

use rayon::prelude::*;

use super::{build_ii, BuildParams, BuildReport, Built, PhaseCounts};
use crate::data::{mean_of, SubsetView, Vectors};
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};
use crate::graph::{ensure_connected, FlatGraph, Index, Partition, PartitionMode, PartitionedIndex};
use crate::rng::{stream, Domain};
use crate::seeds::{kmeans::balanced_kmeans, medoid_seed, SeedIndex, SeedStrategy};

/// Recursive balanced 2-means until every part holds at most `leaf_size` rows.
///
/// Each split sends `ceil(m/2)` rows to one side and `floor(m/2)` to the other.
/// Returns ascending member lists with their centroids; the counter receives
/// every assignment distance.
pub fn balanced_partition<V: Vectors + ?Sized>(
    set: &V,
    leaf_size: usize,
    seed: u64,
    counter: &mut DistCounter,
) -> Result<Vec<(Vec<NodeId>, Vec<f32>)>> {
    if leaf_size < 2 {
        return Err(Error::param("leaf size must be >= 2"));
    }
    if set.is_empty() {
        return Err(Error::param("cannot partition an empty set"));
    }
    let mut rng = stream(seed, Domain::Partition, 0);
    let mut out = Vec::new();
    let mut stack = vec![(0..set.len() as NodeId).collect::<Vec<_>>()];
    while let Some(members) = stack.pop() {
        if members.len() <= leaf_size {
            let centroid = mean_of(set, &members);
            out.push((members, centroid));
            continue;
        }
        let halves = balanced_kmeans(set, &members, 2, &mut rng, counter);
        // depth-first, first half first
        for (_, g) in halves.into_iter().rev() {
            stack.push(g);
        }
    }
    Ok(out)
}

/// Renumbers a partition so that `entry` becomes local id 0 and the rest keep
/// their relative order.
fn entry_first(members: &[NodeId], graph: &FlatGraph, entry: NodeId) -> Result<(Vec<NodeId>, FlatGraph)> {
    let m = members.len();
    let e = entry as usize;
    let to_new = |old: NodeId| -> NodeId {
        let o = old as usize;
        if o == e {
            0
        } else if o < e {
            old + 1
        } else {
            old
        }
    };
    let mut new_members = vec![0; m];
    let mut lists = vec![Vec::new(); m];
    for old in 0..m as NodeId {
        let new = to_new(old) as usize;
        new_members[new] = members[old as usize];
        lists[new] = graph.neighbors(old).iter().map(|&v| to_new(v)).collect();
    }
    Ok((new_members, FlatGraph::from_lists(graph.cap(), lists)?))
}

/// Partitions, builds each part with insertion, then merges or keeps the parts.
///
/// Merged mode unions the part graphs into one flat graph and repairs
/// reachability from the global medoid. Separate mode keeps each part with its
/// centroid; a part's entry (local id 0) is its member nearest the centroid.
pub fn build_dc<V: Vectors + ?Sized>(set: &V, p: &BuildParams, mode: PartitionMode) -> Result<Built> {
    p.validate()?;
    if p.ss == SeedStrategy::Sn {
        return Err(Error::param("SN layers are not supported for partitioned builds"));
    }
    p.install(|| build(set, p, mode))?
}

fn build<V: Vectors + ?Sized>(set: &V, p: &BuildParams, mode: PartitionMode) -> Result<Built> {
    let started = Instant::now();
    let mut phases = PhaseCounts::default();
    let mut counter = DistCounter::new();
    let parts = balanced_partition(set, p.leaf_size, p.seed, &mut counter)?;
    phases.partition += counter.count();

    let sub = BuildParams { threads: 0, connect: false, ..*p };
    let build_part = |(members, centroid): (Vec<NodeId>, Vec<f32>)| -> Result<(Partition, PhaseCounts)> {
        let view = SubsetView::new(set, &members);
        let built = build_ii(&view, &sub)?;
        let Index::Flat(graph) = built.index else {
            unreachable!("non-SN builds are flat")
        };
        let mut phases = built.report.phases;
        let mut c = DistCounter::new();
        let entry = (0..members.len() as NodeId)
            .map(|i| Candidate::new(i, c.squared(&centroid, view.row(i))))
            .min()
            .expect("partitions are non-empty")
            .id;
        let (members, mut graph) = entry_first(&members, &graph, entry)?;
        if p.connect && mode == PartitionMode::Separate {
            ensure_connected(&mut graph, 0, &SubsetView::new(set, &members), &p.nd, &mut c)?;
        }
        phases.repair += c.count();
        Ok((Partition { members, centroid, graph }, phases))
    };
    let built: Vec<(Partition, PhaseCounts)> = if p.deterministic {
        parts.into_iter().map(build_part).collect::<Result<_>>()?
    } else {
        parts.into_par_iter().map(build_part).collect::<Result<_>>()?
    };
    let mut partitions = Vec::with_capacity(built.len());
    for (part, ph) in built {
        phases.add(&ph);
        partitions.push(part);
    }

    let mut counter = DistCounter::new();
    let seeds = SeedIndex::build(p.ss, set, &p.seed_params(), &mut counter)?;
    phases.seeding += counter.count();

    let mut repair_edges = 0;
    let partitioned = PartitionedIndex { mode, partitions };
    let index = match mode {
        PartitionMode::Separate => Index::Partitioned(partitioned),
        PartitionMode::Merged => {
            let mut g = partitioned.merged_graph()?;
            let mut c = DistCounter::new();
            let root = medoid_seed(set, &mut c);
            repair_edges = ensure_connected(&mut g, root, set, &p.nd, &mut c)?;
            phases.repair += c.count();
            Index::Flat(g)
        }
    };
    let mut report = BuildReport::finish(phases, started);
    report.repair_edges = repair_edges;
    Ok(Built { index, seeds, report })
}
