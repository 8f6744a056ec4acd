//! Incremental insertion: each node is linked to the diversified result of a
//! beam search over the nodes inserted before it.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use parking_lot::Mutex;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::locked::LockedLevel;
use super::{BuildParams, BuildReport, Built, PhaseCounts};
use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::diversify::CandidateList;
use crate::error::{Error, Result};
use crate::graph::{ensure_connected, FlatGraph, Index, LayeredGraph};
use crate::rng::{open_unit, stream, Domain};
use crate::search::{beam_core, QueryEval, Scratch};
use crate::seeds::{assign_layer, greedy_walk, ks_seeds, SeedIndex, SeedStrategy};

/// Insertions done by one worker before the rest are spread across the pool.
const WARMUP: usize = 1000;

/// Builds a flat graph, or a layered graph when `p.ss` is SN.
pub fn build_ii<V: Vectors + ?Sized>(set: &V, p: &BuildParams) -> Result<Built> {
    p.validate()?;
    if set.is_empty() {
        return Err(Error::param("cannot build over an empty set"));
    }
    if set.len() > NodeId::MAX as usize {
        return Err(Error::param("node count exceeds id range"));
    }
    p.install(|| build(set, p))?
}

fn build<V: Vectors + ?Sized>(set: &V, p: &BuildParams) -> Result<Built> {
    let started = Instant::now();
    let n = set.len();
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    if p.shuffle {
        order.shuffle(&mut stream(p.seed, Domain::Shuffle, 0));
    }
    let mut pos = vec![0usize; n];
    for (i, &u) in order.iter().enumerate() {
        pos[u as usize] = i;
    }

    let mut phases = PhaseCounts::default();
    let mut counter = DistCounter::new();
    let seed_index = SeedIndex::build(p.ss, set, &p.seed_params(), &mut counter)?;
    phases.seeding += counter.count();

    let top: Vec<u8> = if p.ss == SeedStrategy::Sn {
        (0..n as u64)
            .map(|u| {
                let xi = open_unit(&mut stream(p.seed, Domain::Layer, u));
                assign_layer(xi, p.m).map(|l| l.min(u8::MAX as usize) as u8)
            })
            .collect::<Result<_>>()?
    } else {
        vec![0; n]
    };
    let num_levels = *top.iter().max().expect("n >= 1") as usize + 1;
    let first = order[0];

    let ctx = Inserter {
        set,
        p,
        order: &order,
        pos: &pos,
        seeds: &seed_index,
        top: &top,
        levels: (0..num_levels).map(|_| LockedLevel::new(n)).collect(),
        entry: Mutex::new((first, top[first as usize])),
        seeding: AtomicU64::new(0),
        search: AtomicU64::new(0),
        pruning: AtomicU64::new(0),
    };
    let warm = if p.deterministic { n } else { n.min(WARMUP) };
    let mut scratch = Scratch::new(n);
    for i in 1..warm {
        ctx.insert(i, &mut scratch);
    }
    if warm < n {
        (warm..n)
            .into_par_iter()
            .for_each_init(|| Scratch::new(n), |s, i| ctx.insert(i, s));
    }

    phases.seeding += ctx.seeding.into_inner();
    phases.search += ctx.search.into_inner();
    phases.pruning += ctx.pruning.into_inner();
    let (entry, _) = ctx.entry.into_inner();
    let mut levels = ctx
        .levels
        .into_iter()
        .map(|l| l.into_flat(p.cap_r))
        .collect::<Result<Vec<FlatGraph>>>()?;

    let mut repair_edges = 0;
    if p.connect {
        let root = match seed_index {
            SeedIndex::Sn => entry,
            SeedIndex::Md(id) | SeedIndex::Sf(id) => id,
            _ => first,
        };
        let mut c = DistCounter::new();
        repair_edges = ensure_connected(&mut levels[0], root, set, &p.nd, &mut c)?;
        phases.repair += c.count();
    }
    let index = if p.ss == SeedStrategy::Sn {
        Index::Layered(LayeredGraph::new(levels, top, entry)?)
    } else {
        Index::Flat(levels.pop().expect("one level"))
    };
    let mut report = BuildReport::finish(phases, started);
    report.repair_edges = repair_edges;
    Ok(Built { index, seeds: seed_index, report })
}

struct Inserter<'a, V: Vectors + ?Sized> {
    set: &'a V,
    p: &'a BuildParams,
    order: &'a [NodeId],
    pos: &'a [usize],
    seeds: &'a SeedIndex,
    top: &'a [u8],
    levels: Vec<LockedLevel>,
    /// Current entry and its top layer.
    entry: Mutex<(NodeId, u8)>,
    seeding: AtomicU64,
    search: AtomicU64,
    pruning: AtomicU64,
}

impl<V: Vectors + ?Sized> Inserter<'_, V> {
    /// Inserts the node at position `i` of the insertion order.
    fn insert(&self, i: usize, scratch: &mut Scratch) {
        let u = self.order[i];
        let mut eval = QueryEval::new(self.set, self.set.row(u), scratch);
        let mut prune = DistCounter::new();
        let seeding;
        if let SeedIndex::Sn = self.seeds {
            let (entry, entry_top) = *self.entry.lock();
            let tu = self.top[u as usize];
            let mut cur = Candidate::new(entry, eval.node(entry));
            for l in (tu as usize + 1..=entry_top as usize).rev() {
                cur = greedy_walk(&self.levels[l], &mut eval, cur);
            }
            seeding = eval.counter().count();
            let mut frontier = vec![cur];
            for l in (0..=tu.min(entry_top) as usize).rev() {
                eval.reset_seen();
                let out = beam_core(&self.levels[l], &mut eval, &frontier, self.p.beam_l);
                self.link(l, u, out.pool(), &mut prune);
                frontier = out.frontier;
            }
            if tu > entry_top {
                let mut e = self.entry.lock();
                if tu > e.1 {
                    *e = (u, tu);
                }
            }
        } else {
            let seeds = self.seeds_for(i, &mut eval);
            seeding = eval.counter().count();
            let out = beam_core(&self.levels[0], &mut eval, &seeds, self.p.beam_l);
            self.link(0, u, out.pool(), &mut prune);
        }
        self.seeding.fetch_add(seeding, Ordering::Relaxed);
        self.search.fetch_add(eval.counter().count() - seeding, Ordering::Relaxed);
        self.pruning.fetch_add(prune.count(), Ordering::Relaxed);
    }

    /// Seeds restricted to nodes placed before position `i`.
    fn seeds_for(&self, i: usize, eval: &mut QueryEval<'_, V>) -> Vec<Candidate> {
        let s = self.p.seed_count();
        let inserted = |id: NodeId| self.pos[id as usize] < i;
        let mut ids: Vec<NodeId> = match self.seeds {
            SeedIndex::Ks { seed } => ks_seeds(i, s.min(i), i as u64, *seed)
                .expect("1 <= s <= i")
                .into_iter()
                .map(|x| self.order[x as usize])
                .collect(),
            SeedIndex::Md(id) | SeedIndex::Sf(id) => vec![*id],
            SeedIndex::Kd(f) => f.seeds(eval, s).into_iter().map(|c| c.id).collect(),
            SeedIndex::Km(t) => t.seeds(eval, s).into_iter().map(|c| c.id).collect(),
            SeedIndex::Sn => unreachable!("SN handled by layer descent"),
        };
        ids.retain(|&id| inserted(id));
        if ids.is_empty() {
            ids.push(self.order[0]);
        }
        let mut out: Vec<Candidate> = ids.into_iter().map(|id| Candidate::new(id, eval.node(id))).collect();
        out.sort_unstable();
        out
    }

    /// Sets `u`'s layer-`l` list to the diversified pool and adds reverse edges,
    /// re-pruning any neighbor pushed over the cap.
    fn link(&self, l: usize, u: NodeId, pool: Vec<Candidate>, prune: &mut DistCounter) {
        let (set, nd, cap) = (self.set, &self.p.nd, self.p.cap_r);
        let list = CandidateList::from_unsorted(u, pool);
        let kept = nd.prune(set, &list, cap, prune);
        let level = &self.levels[l];
        level.set(u, kept.clone());
        for v in kept {
            let mut nbrs = level.write(v);
            if nbrs.contains(&u) {
                continue;
            }
            nbrs.push(u);
            if nbrs.len() > cap {
                let xv = set.row(v);
                let entries = nbrs
                    .iter()
                    .map(|&w| Candidate::new(w, prune.squared(xv, set.row(w))))
                    .collect();
                let survivors = nd.prune(set, &CandidateList::from_unsorted(v, entries), cap, prune);
                nbrs.retain(|w| survivors.contains(w));
            }
        }
    }
}
