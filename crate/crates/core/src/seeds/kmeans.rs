//! Balanced k-means: capacity-constrained Lloyd iterations, and the tree built from them.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::{sample_ids, SeedParams};
use crate::data::{mean_of, Vectors};
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};
use crate::graph::io::{ByteReader, ByteWriter};
use crate::rng::{stream, Domain};
use crate::search::QueryEval;

const LLOYD_ITERS: usize = 8;

/// One cluster: centroid and ascending member ids.
pub(crate) type Cluster = (Vec<f32>, Vec<NodeId>);

/// Splits `members` into at most `k` clusters of at most `ceil(m / k)` members each.
///
/// Assignment is greedy over all (member, centroid) pairs in ascending distance,
/// skipping full clusters. Empty clusters are dropped from the result.
pub(crate) fn balanced_kmeans<V: Vectors + ?Sized>(
    set: &V,
    members: &[NodeId],
    k: usize,
    rng: &mut ChaCha8Rng,
    counter: &mut DistCounter,
) -> Vec<Cluster> {
    let m = members.len();
    let k = k.clamp(1, m.max(1));
    let cap = m.div_ceil(k);
    let mut centroids: Vec<Vec<f32>> = index::sample(rng, m, k)
        .into_iter()
        .map(|i| set.row(members[i]).to_vec())
        .collect();
    let mut assign = vec![usize::MAX; m];
    let mut pairs: Vec<(f32, u32, u32)> = Vec::with_capacity(m * k);
    for _ in 0..LLOYD_ITERS {
        pairs.clear();
        for (i, &id) in members.iter().enumerate() {
            let row = set.row(id);
            for (c, centroid) in centroids.iter().enumerate() {
                pairs.push((counter.squared(row, centroid), i as u32, c as u32));
            }
        }
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut next = vec![usize::MAX; m];
        let mut fill = vec![0usize; k];
        for &(_, i, c) in &pairs {
            let (i, c) = (i as usize, c as usize);
            if next[i] == usize::MAX && fill[c] < cap {
                next[i] = c;
                fill[c] += 1;
            }
        }
        let changed = next != assign;
        assign = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let group: Vec<NodeId> = (0..m).filter(|&i| assign[i] == c).map(|i| members[i]).collect();
            if !group.is_empty() {
                *centroid = mean_of(set, &group);
            }
        }
        if !changed {
            break;
        }
    }
    let mut clusters: Vec<Cluster> = centroids.into_iter().map(|c| (c, Vec::new())).collect();
    for (i, &c) in assign.iter().enumerate() {
        clusters[c].1.push(members[i]);
    }
    clusters.retain(|(_, g)| !g.is_empty());
    for (_, g) in &mut clusters {
        g.sort_unstable();
    }
    clusters
}

#[derive(Clone, Debug, PartialEq)]
pub enum KmNode {
    Leaf(Vec<NodeId>),
    Inner(Vec<(Vec<f32>, KmNode)>),
}

/// Balanced k-means tree over a random sample.
#[derive(Clone, Debug, PartialEq)]
pub struct KmTree {
    pub root: KmNode,
}

impl KmTree {
    pub fn build<V: Vectors + ?Sized>(set: &V, params: &SeedParams, counter: &mut DistCounter) -> Result<Self> {
        if params.km_branching < 2 || params.km_leaf == 0 {
            return Err(Error::param("k-means tree needs branching >= 2 and leaf cap >= 1"));
        }
        let sample = sample_ids(set.len(), params.sample_size(set.len()), params.seed, u64::MAX);
        let mut rng = stream(params.seed, Domain::KMeans, 0);
        let root = build_node(set, sample, params, &mut rng, counter);
        Ok(Self { root })
    }

    /// Depth-first toward the nearest centroids, pooling leaf members until `s`
    /// are collected; returns the `s` nearest of them.
    pub fn seeds<V: Vectors + ?Sized>(&self, eval: &mut QueryEval<'_, V>, s: usize) -> Vec<Candidate> {
        let mut pooled = Vec::new();
        collect(&self.root, eval, s, &mut pooled);
        let mut cands: Vec<Candidate> = pooled
            .into_iter()
            .map(|id| Candidate::new(id, eval.node(id)))
            .collect();
        cands.sort_unstable();
        cands.truncate(s);
        cands
    }

    /// Sizes of all leaves with their depth (root = 0).
    pub fn leaf_sizes(&self) -> Vec<(usize, usize)> {
        fn walk(n: &KmNode, depth: usize, out: &mut Vec<(usize, usize)>) {
            match n {
                KmNode::Leaf(ids) => out.push((depth, ids.len())),
                KmNode::Inner(children) => children.iter().for_each(|(_, c)| walk(c, depth + 1, out)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 0, &mut out);
        out
    }

    pub(crate) fn encode(&self, w: &mut ByteWriter) {
        encode_node(&self.root, w);
    }

    pub(crate) fn decode(r: &mut ByteReader<'_>, n: usize, dim: usize) -> Result<Self> {
        Ok(Self { root: decode_node(r, n, dim)? })
    }
}

fn build_node<V: Vectors + ?Sized>(
    set: &V,
    members: Vec<NodeId>,
    params: &SeedParams,
    rng: &mut ChaCha8Rng,
    counter: &mut DistCounter,
) -> KmNode {
    if members.len() <= params.km_leaf {
        return KmNode::Leaf(members);
    }
    let clusters = balanced_kmeans(set, &members, params.km_branching, rng, counter);
    KmNode::Inner(
        clusters
            .into_iter()
            .map(|(c, g)| (c, build_node(set, g, params, rng, counter)))
            .collect(),
    )
}

fn collect<V: Vectors + ?Sized>(node: &KmNode, eval: &mut QueryEval<'_, V>, s: usize, out: &mut Vec<NodeId>) {
    if out.len() >= s {
        return;
    }
    match node {
        KmNode::Leaf(ids) => out.extend_from_slice(ids),
        KmNode::Inner(children) => {
            let mut order: Vec<Candidate> = children
                .iter()
                .enumerate()
                .map(|(i, (c, _))| Candidate::new(i as NodeId, eval.aux(c)))
                .collect();
            order.sort_unstable();
            for c in order {
                collect(&children[c.id as usize].1, eval, s, out);
            }
        }
    }
}

fn encode_node(node: &KmNode, w: &mut ByteWriter) {
    match node {
        KmNode::Leaf(ids) => {
            w.u8(0);
            w.u32(ids.len() as u32);
            w.ids(ids);
        }
        KmNode::Inner(children) => {
            w.u8(1);
            w.u32(children.len() as u32);
            for (c, child) in children {
                w.f32s(c);
                encode_node(child, w);
            }
        }
    }
}

fn decode_node(r: &mut ByteReader<'_>, n: usize, dim: usize) -> Result<KmNode> {
    match r.u8()? {
        0 => {
            let count = r.u32()? as usize;
            Ok(KmNode::Leaf(r.ids(count, n)?))
        }
        1 => {
            let count = r.u32()? as usize;
            let mut children = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let c = r.f32s(dim)?;
                children.push((c, decode_node(r, n, dim)?));
            }
            Ok(KmNode::Inner(children))
        }
        t => Err(Error::Corrupt(format!("unknown k-means node tag {t}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_powerlaw, PowerLawSpec};
    use crate::search::Scratch;

    #[test]
    fn clusters_are_balanced_and_cover() {
        let set = gen_powerlaw(&PowerLawSpec::new(1001, 3, 5.0, 1)).unwrap();
        let members: Vec<NodeId> = (0..1001).collect();
        let mut rng = stream(1, Domain::KMeans, 0);
        let clusters = balanced_kmeans(&set, &members, 4, &mut rng, &mut DistCounter::new());
        let mut all: Vec<NodeId> = clusters.iter().flat_map(|(_, g)| g.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, members);
        assert!(clusters.iter().all(|(_, g)| g.len() <= 251));
    }

    #[test]
    fn two_way_split_is_even() {
        let set = gen_powerlaw(&PowerLawSpec::new(777, 4, 0.0, 2)).unwrap();
        let members: Vec<NodeId> = (0..777).collect();
        let mut rng = stream(2, Domain::KMeans, 0);
        let c = balanced_kmeans(&set, &members, 2, &mut rng, &mut DistCounter::new());
        let mut sizes: Vec<usize> = c.iter().map(|(_, g)| g.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![388, 389]);
    }

    #[test]
    fn tree_leaf_balance() {
        let set = gen_powerlaw(&PowerLawSpec::new(20_000, 4, 0.0, 3)).unwrap();
        let params = SeedParams::with_seed(5);
        let tree = KmTree::build(&set, &params, &mut DistCounter::new()).unwrap();
        let sample = params.sample_size(20_000) as f64;
        for (depth, size) in tree.leaf_sizes() {
            assert!(size <= 64);
            let bound = (sample / (params.km_branching as f64).powi(depth as i32)).ceil() as usize + 1;
            assert!(size <= bound, "leaf of {size} at depth {depth} exceeds {bound}");
        }
    }

    #[test]
    fn single_leaf_tree_is_brute_force_over_sample() {
        let set = gen_powerlaw(&PowerLawSpec::new(500, 3, 0.0, 6)).unwrap();
        let params = SeedParams { km_leaf: 64, sample_fraction: 0.1, ..SeedParams::with_seed(4) };
        let tree = KmTree::build(&set, &params, &mut DistCounter::new()).unwrap();
        let sample = match &tree.root {
            KmNode::Leaf(ids) => ids.clone(),
            _ => panic!("expected a single leaf"),
        };
        let q = [0.3f32, 0.3, 0.3];
        let mut scratch = Scratch::new(500);
        let got = tree.seeds(&mut QueryEval::new(&set, &q, &mut scratch), 5);
        let mut c = DistCounter::new();
        let mut want: Vec<Candidate> = sample.iter().map(|&id| Candidate::new(id, c.squared(&q, set.row(id)))).collect();
        want.sort_unstable();
        want.truncate(5);
        assert_eq!(got, want);
    }

    #[test]
    fn deterministic_given_seed() {
        let set = gen_powerlaw(&PowerLawSpec::new(5000, 4, 0.0, 7)).unwrap();
        let params = SeedParams::with_seed(11);
        let a = KmTree::build(&set, &params, &mut DistCounter::new()).unwrap();
        let b = KmTree::build(&set, &params, &mut DistCounter::new()).unwrap();
        assert_eq!(a, b);
    }
}
