//! Seed selection: the starting nodes of a beam search.
//!
//! | strategy | structure                        | seeds per query |
//! |----------|----------------------------------|-----------------|
//! | SN       | hierarchical sampled layers      | 1 (greedy descent) |
//! | KD       | K-D forest over a sample         | up to `s`       |
//! | KM       | balanced k-means tree on a sample| up to `s`       |
//! | MD       | approximate medoid               | 1 (fixed)       |
//! | SF       | one random node                  | 1 (fixed)       |
//! | KS       | none                             | `s` fresh random nodes |
//!
//! Every node distance evaluated while choosing seeds is charged to the query.

mod kd;
pub(crate) mod kmeans;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

pub use kd::{KdForest, KdNode};
pub use kmeans::{KmNode, KmTree};

use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};
use crate::graph::{Adjacency, LayeredGraph};
use crate::rng::{stream, Domain};
use crate::search::QueryEval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeedStrategy {
    Sn,
    Kd,
    Km,
    Md,
    Sf,
    Ks,
}

impl SeedStrategy {
    pub const ALL: [SeedStrategy; 6] = [
        SeedStrategy::Sn,
        SeedStrategy::Kd,
        SeedStrategy::Km,
        SeedStrategy::Md,
        SeedStrategy::Sf,
        SeedStrategy::Ks,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SeedStrategy::Sn => "sn",
            SeedStrategy::Kd => "kd",
            SeedStrategy::Km => "km",
            SeedStrategy::Md => "md",
            SeedStrategy::Sf => "sf",
            SeedStrategy::Ks => "ks",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            SeedStrategy::Sn => 0,
            SeedStrategy::Kd => 1,
            SeedStrategy::Km => 2,
            SeedStrategy::Md => 3,
            SeedStrategy::Sf => 4,
            SeedStrategy::Ks => 5,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for SeedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SeedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown seed strategy {s:?}")))
    }
}

/// Tunables of the seed structures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedParams {
    pub kd_trees: usize,
    pub kd_leaf: usize,
    pub km_branching: usize,
    pub km_leaf: usize,
    pub sample_fraction: f64,
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for SeedParams {
    fn default() -> Self {
        Self {
            kd_trees: 4,
            kd_leaf: 32,
            km_branching: 8,
            km_leaf: 64,
            sample_fraction: 0.05,
            sample_cap: 100_000,
            seed: 0,
        }
    }
}

impl SeedParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub(crate) fn sample_size(&self, n: usize) -> usize {
        ((n as f64 * self.sample_fraction).round() as usize)
            .clamp(1, self.sample_cap.max(1))
            .min(n)
    }
}

/// Draws a sorted random sample of `size` distinct ids below `n`.
pub(crate) fn sample_ids(n: usize, size: usize, seed: u64, stream_id: u64) -> Vec<NodeId> {
    let mut rng = stream(seed, Domain::Sample, stream_id);
    let mut ids: Vec<NodeId> = index::sample(&mut rng, n, size.min(n))
        .into_iter()
        .map(|i| i as NodeId)
        .collect();
    ids.sort_unstable();
    ids
}

/// Top layer of a node: `floor(-ln(xi) / ln(M / 2))`.
pub fn assign_layer(xi: f64, m: f64) -> Result<usize> {
    if !(m > 2.0) {
        return Err(Error::param(format!("layer assignment needs M > 2, got {m}")));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::param(format!("xi must lie in (0, 1), got {xi}")));
    }
    Ok((-xi.ln() / (m / 2.0).ln()).floor() as usize)
}

/// Greedy single-candidate walk: move to the closest neighbor while it is strictly closer.
pub(crate) fn greedy_walk<G, V>(graph: &G, eval: &mut QueryEval<'_, V>, start: Candidate) -> Candidate
where
    G: Adjacency + ?Sized,
    V: Vectors + ?Sized,
{
    let mut current = start;
    let mut neighbors = Vec::new();
    loop {
        graph.copy_neighbors(current.id, &mut neighbors);
        let mut best = current;
        for &nb in &neighbors {
            let c = Candidate::new(nb, eval.node(nb));
            if c.dist < best.dist {
                best = c;
            }
        }
        if best.id == current.id {
            return current;
        }
        current = best;
    }
}

/// Descends the upper layers from the fixed entry; returns the base-layer seed.
pub fn sn_descend<V: Vectors + ?Sized>(layers: &LayeredGraph, eval: &mut QueryEval<'_, V>) -> Candidate {
    let entry = layers.entry();
    let mut current = Candidate::new(entry, eval.node(entry));
    for l in (1..layers.num_levels()).rev() {
        current = greedy_walk(layers.level(l), eval, current);
    }
    current
}

/// Node nearest to the dataset centroid.
pub fn medoid_seed<V: Vectors + ?Sized>(set: &V, counter: &mut DistCounter) -> NodeId {
    let all: Vec<NodeId> = (0..set.len() as NodeId).collect();
    let centroid = crate::data::mean_of(set, &all);
    all.into_iter()
        .map(|id| Candidate::new(id, counter.squared(&centroid, set.row(id))))
        .min()
        .expect("set is non-empty")
        .id
}

/// One uniformly drawn node, fixed for all queries.
pub fn sf_seed(n: usize, seed: u64) -> NodeId {
    stream(seed, Domain::FixedEntry, 0).random_range(0..n as NodeId)
}

/// `s` distinct uniformly drawn nodes, a fresh draw per query index.
pub fn ks_seeds(n: usize, s: usize, query_index: u64, seed: u64) -> Result<Vec<NodeId>> {
    if s == 0 || s > n {
        return Err(Error::param(format!("cannot draw {s} distinct seeds from {n} nodes")));
    }
    let mut rng = stream(seed, Domain::KsSeeds, query_index);
    Ok(index::sample(&mut rng, n, s)
        .into_iter()
        .map(|i| i as NodeId)
        .collect())
}

/// A built seed-selection structure.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedIndex {
    /// Seeds come from the layered graph itself.
    Sn,
    Kd(KdForest),
    Km(KmTree),
    Md(NodeId),
    Sf(NodeId),
    Ks { seed: u64 },
}

impl SeedIndex {
    /// Builds the structure for `strategy`; distance evaluations go to `counter`.
    pub fn build<V: Vectors + ?Sized>(
        strategy: SeedStrategy,
        set: &V,
        params: &SeedParams,
        counter: &mut DistCounter,
    ) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::param("cannot build seeds over an empty set"));
        }
        Ok(match strategy {
            SeedStrategy::Sn => SeedIndex::Sn,
            SeedStrategy::Kd => SeedIndex::Kd(KdForest::build(set, params)?),
            SeedStrategy::Km => SeedIndex::Km(KmTree::build(set, params, counter)?),
            SeedStrategy::Md => SeedIndex::Md(medoid_seed(set, counter)),
            SeedStrategy::Sf => SeedIndex::Sf(sf_seed(set.len(), params.seed)),
            SeedStrategy::Ks => SeedIndex::Ks { seed: params.seed },
        })
    }

    pub fn strategy(&self) -> SeedStrategy {
        match self {
            SeedIndex::Sn => SeedStrategy::Sn,
            SeedIndex::Kd(_) => SeedStrategy::Kd,
            SeedIndex::Km(_) => SeedStrategy::Km,
            SeedIndex::Md(_) => SeedStrategy::Md,
            SeedIndex::Sf(_) => SeedStrategy::Sf,
            SeedIndex::Ks { .. } => SeedStrategy::Ks,
        }
    }

    /// Seeds for one query, ascending by squared distance.
    ///
    /// SN needs the layered graph; the others ignore it.
    pub fn seeds<V: Vectors + ?Sized>(
        &self,
        eval: &mut QueryEval<'_, V>,
        s: usize,
        query_index: u64,
        layers: Option<&LayeredGraph>,
    ) -> Result<Vec<Candidate>> {
        let n = eval.set().len();
        let s = s.max(1);
        let mut out: Vec<Candidate> = match self {
            SeedIndex::Sn => {
                let layers = layers.ok_or_else(|| {
                    Error::param("SN seeds need a layered index")
                })?;
                vec![sn_descend(layers, eval)]
            }
            SeedIndex::Kd(forest) => forest.seeds(eval, s),
            SeedIndex::Km(tree) => tree.seeds(eval, s),
            SeedIndex::Md(id) | SeedIndex::Sf(id) => {
                if *id as usize >= n {
                    return Err(Error::param("fixed seed outside the vector set"));
                }
                vec![Candidate::new(*id, eval.node(*id))]
            }
            SeedIndex::Ks { seed } => ks_seeds(n, s.min(n), query_index, *seed)?
                .into_iter()
                .map(|id| Candidate::new(id, eval.node(id)))
                .collect(),
        };
        out.sort_unstable();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_powerlaw, PowerLawSpec, VectorSet};
    use crate::rng::open_unit;
    use crate::search::Scratch;

    #[test]
    fn layer_formula() {
        assert_eq!(assign_layer(1.0 - 1e-12, 16.0).unwrap(), 0);
        let m = 2.0 * std::f64::consts::E;
        assert_eq!(assign_layer((-2.0f64).exp(), m).unwrap(), 2);
        assert_eq!(assign_layer((-2.5f64).exp(), m).unwrap(), 2);
        assert!(assign_layer(0.5, 2.0).is_err());
        assert!(assign_layer(0.0, 16.0).is_err());
        assert!(assign_layer(1.0, 16.0).is_err());
    }

    #[test]
    fn upper_layer_fraction_is_two_over_m() {
        let m = 16;
        let mut rng = stream(3, Domain::Layer, 0);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| assign_layer(open_unit(&mut rng), m as f64).unwrap() >= 1)
            .count();
        let p = 2.0 / m as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let got = hits as f64 / draws as f64;
        assert!((got - p).abs() < 3.0 * se, "{got} vs {p}");
    }

    #[test]
    fn medoid_examples() {
        let set = VectorSet::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(medoid_seed(&set, &mut DistCounter::new()), 1);
        let one = VectorSet::new(3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(medoid_seed(&one, &mut DistCounter::new()), 0);
    }

    #[test]
    fn medoid_is_exact_nearest_to_centroid() {
        let set = gen_powerlaw(&PowerLawSpec::new(500, 6, 5.0, 2)).unwrap();
        let mut c = DistCounter::new();
        let m = medoid_seed(&set, &mut c);
        assert_eq!(c.count(), 500);
        let centroid = set.centroid();
        let dm = DistCounter::new().squared(&centroid, set.row(m));
        for row in set.rows() {
            assert!(DistCounter::new().squared(&centroid, row) >= dm);
        }
    }

    #[test]
    fn sf_is_fixed_and_in_range() {
        let a = sf_seed(1000, 5);
        assert_eq!(a, sf_seed(1000, 5));
        assert!(a < 1000);
        let set = gen_powerlaw(&PowerLawSpec::new(100, 3, 0.0, 1)).unwrap();
        let idx = SeedIndex::build(SeedStrategy::Sf, &set, &SeedParams::with_seed(9), &mut DistCounter::new()).unwrap();
        let mut scratch = Scratch::new(100);
        let s1 = idx.seeds(&mut QueryEval::new(&set, set.row(3), &mut scratch), 4, 0, None).unwrap();
        let s2 = idx.seeds(&mut QueryEval::new(&set, set.row(50), &mut scratch), 4, 1, None).unwrap();
        assert_eq!(s1.len(), 1);
        assert_eq!(s1[0].id, s2[0].id);
    }

    #[test]
    fn ks_draws() {
        let mut all = ks_seeds(10, 10, 0, 1).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let a = ks_seeds(1000, 20, 1, 7).unwrap();
        assert_eq!(a, ks_seeds(1000, 20, 1, 7).unwrap());
        assert_ne!(a, ks_seeds(1000, 20, 2, 7).unwrap());
        let mut d = a.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 20);
        assert!(ks_seeds(5, 6, 0, 1).is_err());
    }

    #[test]
    fn strategy_parsing() {
        for s in SeedStrategy::ALL {
            assert_eq!(s.label().parse::<SeedStrategy>().unwrap(), s);
            assert_eq!(SeedStrategy::from_tag(s.tag()), Some(s));
        }
        assert!("lsh".parse::<SeedStrategy>().is_err());
    }

    #[test]
    fn sn_needs_layers() {
        let set = VectorSet::new(1, vec![0.0, 1.0]).unwrap();
        let mut scratch = Scratch::new(2);
        let q = [0.5f32];
        assert!(SeedIndex::Sn
            .seeds(&mut QueryEval::new(&set, &q, &mut scratch), 1, 0, None)
            .is_err());
    }
}
