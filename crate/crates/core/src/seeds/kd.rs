//! Forest of K-D trees over random samples, searched depth-first for seeds.

use super::{sample_ids, SeedParams};
use crate::data::Vectors;
use crate::distance::{Candidate, NodeId};
use crate::error::{Error, Result};
use crate::graph::io::{ByteReader, ByteWriter};
use crate::search::QueryEval;

#[derive(Clone, Debug, PartialEq)]
pub enum KdNode {
    Leaf(Vec<NodeId>),
    /// Points with `x[dim] < value` go left.
    Split {
        dim: u32,
        value: f32,
        left: Box<KdNode>,
        right: Box<KdNode>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KdForest {
    pub trees: Vec<KdNode>,
}

impl KdForest {
    /// One tree per independent sample; splits on the highest-variance dimension at the median.
    pub fn build<V: Vectors + ?Sized>(set: &V, params: &SeedParams) -> Result<Self> {
        if params.kd_trees == 0 || params.kd_leaf == 0 {
            return Err(Error::param("K-D forest needs at least one tree and leaf size >= 1"));
        }
        let size = params.sample_size(set.len());
        let trees = (0..params.kd_trees)
            .map(|t| {
                let sample = sample_ids(set.len(), size, params.seed, t as u64);
                build_node(set, sample, params.kd_leaf)
            })
            .collect();
        Ok(Self { trees })
    }

    /// The `s` nearest of the pooled leaf members reached by depth-first descent.
    ///
    /// Each tree visits the query's side of every split first and keeps backtracking
    /// until it has contributed at least `s` members or is exhausted.
    pub fn seeds<V: Vectors + ?Sized>(&self, eval: &mut QueryEval<'_, V>, s: usize) -> Vec<Candidate> {
        let q = eval.query();
        let mut pooled = Vec::new();
        for tree in &self.trees {
            let mut taken = 0usize;
            collect(tree, q, s, &mut taken, &mut pooled);
        }
        pooled.sort_unstable();
        pooled.dedup();
        let mut cands: Vec<Candidate> = pooled
            .into_iter()
            .map(|id| Candidate::new(id, eval.node(id)))
            .collect();
        cands.sort_unstable();
        cands.truncate(s);
        cands
    }

    pub fn max_leaf(&self) -> usize {
        fn walk(n: &KdNode) -> usize {
            match n {
                KdNode::Leaf(ids) => ids.len(),
                KdNode::Split { left, right, .. } => walk(left).max(walk(right)),
            }
        }
        self.trees.iter().map(walk).max().unwrap_or(0)
    }

    pub(crate) fn encode(&self, w: &mut ByteWriter) {
        w.u32(self.trees.len() as u32);
        for t in &self.trees {
            encode_node(t, w);
        }
    }

    pub(crate) fn decode(r: &mut ByteReader<'_>, n: usize) -> Result<Self> {
        let count = r.u32()? as usize;
        let trees = (0..count)
            .map(|_| decode_node(r, n))
            .collect::<Result<_>>()?;
        Ok(Self { trees })
    }
}

fn build_node<V: Vectors + ?Sized>(set: &V, mut members: Vec<NodeId>, leaf: usize) -> KdNode {
    if members.len() <= leaf {
        return KdNode::Leaf(members);
    }
    let d = set.dim();
    let m = members.len() as f64;
    let mut mean = vec![0.0f64; d];
    for &id in &members {
        for (a, &v) in mean.iter_mut().zip(set.row(id)) {
            *a += v as f64;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m);
    let mut var = vec![0.0f64; d];
    for &id in &members {
        for ((a, &v), mu) in var.iter_mut().zip(set.row(id)).zip(&mean) {
            *a += (v as f64 - mu).powi(2);
        }
    }
    let (dim, best) = var
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if best <= 0.0 {
        // every member identical
        return KdNode::Leaf(members);
    }
    members.sort_unstable_by(|&a, &b| {
        set.row(a)[dim]
            .total_cmp(&set.row(b)[dim])
            .then(a.cmp(&b))
    });
    let mid = members.len() / 2;
    let value = set.row(members[mid])[dim];
    let right = members.split_off(mid);
    KdNode::Split {
        dim: dim as u32,
        value,
        left: Box::new(build_node(set, members, leaf)),
        right: Box::new(build_node(set, right, leaf)),
    }
}

fn collect(node: &KdNode, q: &[f32], s: usize, taken: &mut usize, out: &mut Vec<NodeId>) {
    if *taken >= s {
        return;
    }
    match node {
        KdNode::Leaf(ids) => {
            out.extend_from_slice(ids);
            *taken += ids.len();
        }
        KdNode::Split { dim, value, left, right } => {
            let (near, far) = if q[*dim as usize] < *value {
                (left, right)
            } else {
                (right, left)
            };
            collect(near, q, s, taken, out);
            collect(far, q, s, taken, out);
        }
    }
}

fn encode_node(node: &KdNode, w: &mut ByteWriter) {
    match node {
        KdNode::Leaf(ids) => {
            w.u8(0);
            w.u32(ids.len() as u32);
            w.ids(ids);
        }
        KdNode::Split { dim, value, left, right } => {
            w.u8(1);
            w.u32(*dim);
            w.f32(*value);
            encode_node(left, w);
            encode_node(right, w);
        }
    }
}

fn decode_node(r: &mut ByteReader<'_>, n: usize) -> Result<KdNode> {
    match r.u8()? {
        0 => {
            let count = r.u32()? as usize;
            Ok(KdNode::Leaf(r.ids(count, n)?))
        }
        1 => {
            let dim = r.u32()?;
            let value = r.f32()?;
            let left = Box::new(decode_node(r, n)?);
            let right = Box::new(decode_node(r, n)?);
            Ok(KdNode::Split { dim, value, left, right })
        }
        t => Err(Error::Corrupt(format!("unknown K-D node tag {t}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_powerlaw, PowerLawSpec};
    use crate::search::Scratch;

    #[test]
    fn leaves_respect_size_and_cover_sample() {
        let set = gen_powerlaw(&PowerLawSpec::new(2000, 5, 0.0, 1)).unwrap();
        let params = SeedParams { sample_fraction: 0.5, ..SeedParams::with_seed(3) };
        let f = KdForest::build(&set, &params).unwrap();
        assert_eq!(f.trees.len(), 4);
        assert!(f.max_leaf() <= 32);
        fn members(n: &KdNode, out: &mut Vec<NodeId>) {
            match n {
                KdNode::Leaf(ids) => out.extend(ids),
                KdNode::Split { left, right, .. } => {
                    members(left, out);
                    members(right, out);
                }
            }
        }
        let mut all = Vec::new();
        members(&f.trees[0], &mut all);
        all.sort_unstable();
        assert_eq!(all, sample_ids(2000, 1000, 3, 0));
    }

    #[test]
    fn sampled_point_found_at_distance_zero() {
        let set = gen_powerlaw(&PowerLawSpec::new(1000, 4, 0.0, 2)).unwrap();
        let params = SeedParams::with_seed(8);
        let f = KdForest::build(&set, &params).unwrap();
        let sample = sample_ids(1000, params.sample_size(1000), 8, 0);
        let target = sample[7];
        let mut scratch = Scratch::new(1000);
        let mut eval = QueryEval::new(&set, set.row(target), &mut scratch);
        let seeds = f.seeds(&mut eval, 1);
        assert_eq!(seeds, vec![Candidate::new(target, 0.0)]);
    }

    #[test]
    fn seeds_distinct_and_from_samples() {
        let set = gen_powerlaw(&PowerLawSpec::new(3000, 8, 0.0, 4)).unwrap();
        let params = SeedParams::with_seed(1);
        let f = KdForest::build(&set, &params).unwrap();
        let size = params.sample_size(3000);
        let mut sampled: Vec<NodeId> = (0..4).flat_map(|t| sample_ids(3000, size, 1, t)).collect();
        sampled.sort_unstable();
        let mut scratch = Scratch::new(3000);
        let q = vec![0.5f32; 8];
        let seeds = f.seeds(&mut QueryEval::new(&set, &q, &mut scratch), 40);
        assert_eq!(seeds.len(), 40);
        let mut ids: Vec<NodeId> = seeds.iter().map(|c| c.id).collect();
        assert!(ids.iter().all(|id| sampled.binary_search(id).is_ok()));
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 40);
        assert!(seeds.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn more_seeds_than_pool_returns_pool() {
        let set = gen_powerlaw(&PowerLawSpec::new(40, 2, 0.0, 4)).unwrap();
        let f = KdForest::build(&set, &SeedParams { kd_trees: 1, ..SeedParams::with_seed(2) }).unwrap();
        let mut scratch = Scratch::new(40);
        let q = [0.1f32, 0.2];
        let seeds = f.seeds(&mut QueryEval::new(&set, &q, &mut scratch), 10);
        assert_eq!(seeds.len(), 2);
    }
}
