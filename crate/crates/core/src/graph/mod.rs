//! Adjacency structures: flat, layered (hierarchical seed layers), and partitioned.

mod connect;
pub(crate) mod io;

pub use connect::{ensure_connected, reachable_from};
pub use io::{load_index, save_index, BuildMeta, IndexFile, FORMAT_VERSION, MAGIC};

use crate::distance::NodeId;
use crate::error::{Error, Result};

/// Read access to out-neighbor lists, shared by finished graphs and graphs under construction.
pub trait Adjacency: Sync {
    fn node_count(&self) -> usize;

    /// Replaces `out` with the current neighbors of `u`.
    fn copy_neighbors(&self, u: NodeId, out: &mut Vec<NodeId>);
}

impl Adjacency for FlatGraph {
    fn node_count(&self) -> usize {
        self.len()
    }

    #[inline]
    fn copy_neighbors(&self, u: NodeId, out: &mut Vec<NodeId>) {
        out.clear();
        out.extend_from_slice(self.neighbors(u));
    }
}

/// Directed graph with a hard out-degree cap. Neighbor lists keep insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatGraph {
    cap: usize,
    adj: Vec<Vec<NodeId>>,
}

impl FlatGraph {
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        if n == 0 || cap == 0 {
            return Err(Error::param("graph needs n >= 1 and cap >= 1"));
        }
        if n > NodeId::MAX as usize {
            return Err(Error::param("node count exceeds id range"));
        }
        Ok(Self {
            cap,
            adj: vec![Vec::new(); n],
        })
    }

    pub fn from_lists(cap: usize, adj: Vec<Vec<NodeId>>) -> Result<Self> {
        let g = Self { cap, adj };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u as usize]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u as usize].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Appends `u -> v`. Returns `Ok(false)` when the edge already exists.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        self.check_edge(u, v)?;
        let list = &mut self.adj[u as usize];
        if list.contains(&v) {
            return Ok(false);
        }
        if list.len() >= self.cap {
            return Err(Error::Graph(format!(
                "node {u} already has the maximum out-degree {}",
                self.cap
            )));
        }
        list.push(v);
        Ok(true)
    }

    /// Replaces the neighbor list of `u`.
    pub fn set_neighbors(&mut self, u: NodeId, neighbors: Vec<NodeId>) -> Result<()> {
        if u as usize >= self.len() {
            return Err(Error::Graph(format!("node {u} out of range")));
        }
        self.check_list(u, &neighbors)?;
        self.adj[u as usize] = neighbors;
        Ok(())
    }

    fn check_edge(&self, u: NodeId, v: NodeId) -> Result<()> {
        let n = self.len() as NodeId;
        if u >= n || v >= n {
            return Err(Error::Graph(format!("edge {u} -> {v} out of range (n = {n})")));
        }
        if u == v {
            return Err(Error::Graph(format!("self-loop on node {u}")));
        }
        Ok(())
    }

    fn check_list(&self, u: NodeId, list: &[NodeId]) -> Result<()> {
        if list.len() > self.cap {
            return Err(Error::Graph(format!(
                "node {u} has degree {} above cap {}",
                list.len(),
                self.cap
            )));
        }
        for (i, &v) in list.iter().enumerate() {
            self.check_edge(u, v)?;
            if list[..i].contains(&v) {
                return Err(Error::Graph(format!("node {u} lists neighbor {v} twice")));
            }
        }
        Ok(())
    }

    /// Walks every adjacency list checking range, self-loops, duplicates, and the cap.
    pub fn validate(&self) -> Result<()> {
        if self.cap == 0 || self.adj.is_empty() {
            return Err(Error::Graph("empty graph or zero cap".into()));
        }
        for (u, list) in self.adj.iter().enumerate() {
            self.check_list(u as NodeId, list)?;
        }
        Ok(())
    }
}

/// Nested sampled layers over one node set. Level 0 is the base layer holding every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredGraph {
    levels: Vec<FlatGraph>,
    top_level: Vec<u8>,
    entry: NodeId,
}

impl LayeredGraph {
    /// `levels[l]` is the graph of layer `l`; nodes above their top level must have no edges.
    pub fn new(levels: Vec<FlatGraph>, top_level: Vec<u8>, entry: NodeId) -> Result<Self> {
        let g = Self {
            levels,
            top_level,
            entry,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.top_level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.top_level.is_empty()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &FlatGraph {
        &self.levels[l]
    }

    pub fn base(&self) -> &FlatGraph {
        &self.levels[0]
    }

    pub fn entry(&self) -> NodeId {
        self.entry
    }

    pub fn top_level_of(&self, u: NodeId) -> usize {
        self.top_level[u as usize] as usize
    }

    /// Nodes present in layer `l`, ascending.
    pub fn members(&self, l: usize) -> Vec<NodeId> {
        (0..self.len() as NodeId)
            .filter(|&u| self.top_level_of(u) >= l)
            .collect()
    }

    pub fn cap(&self) -> usize {
        self.levels[0].cap()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.top_level.len();
        if self.levels.is_empty() || n == 0 {
            return Err(Error::Graph("layered graph without layers".into()));
        }
        if (self.entry as usize) >= n {
            return Err(Error::Graph("entry out of range".into()));
        }
        let top = self.levels.len() - 1;
        if self.top_level_of(self.entry) != top {
            return Err(Error::Graph("entry is not in the top layer".into()));
        }
        for (l, g) in self.levels.iter().enumerate() {
            g.validate()?;
            if g.len() != n {
                return Err(Error::Graph(format!("layer {l} has {} nodes, expected {n}", g.len())));
            }
            for u in 0..n as NodeId {
                let member = self.top_level_of(u) >= l;
                if !member && g.degree(u) > 0 {
                    return Err(Error::Graph(format!("node {u} has edges above its top layer")));
                }
                if let Some(&v) = g.neighbors(u).iter().find(|&&v| self.top_level_of(v) < l) {
                    return Err(Error::Graph(format!("layer {l} edge {u} -> {v} leaves the layer")));
                }
            }
        }
        if self.top_level.iter().any(|&t| t as usize > top) {
            return Err(Error::Graph("node level above the top layer".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    /// Partition graphs unioned into one global graph.
    Merged,
    /// Partition graphs kept apart and probed individually at query time.
    Separate,
}

/// One partition: its member rows, their centroid, and a graph over local ids
/// (`local i` is global `members[i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub members: Vec<NodeId>,
    pub centroid: Vec<f32>,
    pub graph: FlatGraph,
}

impl Partition {
    /// Local id used as the partition's search entry.
    pub fn entry(&self) -> NodeId {
        0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedIndex {
    pub mode: PartitionMode,
    pub partitions: Vec<Partition>,
}

impl PartitionedIndex {
    pub fn len(&self) -> usize {
        self.partitions.iter().map(|p| p.members.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, n: usize, dim: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (pi, p) in self.partitions.iter().enumerate() {
            if p.centroid.len() != dim {
                return Err(Error::Graph(format!("partition {pi} centroid has wrong dimension")));
            }
            if p.graph.len() != p.members.len() {
                return Err(Error::Graph(format!("partition {pi} graph size mismatch")));
            }
            p.graph.validate()?;
            for &m in &p.members {
                let slot = seen
                    .get_mut(m as usize)
                    .ok_or_else(|| Error::Graph(format!("partition member {m} out of range")))?;
                if *slot {
                    return Err(Error::Graph(format!("node {m} in more than one partition")));
                }
                *slot = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Graph("partitions do not cover every node".into()));
        }
        Ok(())
    }

    /// Unions the partition graphs into one graph over global ids.
    pub fn merged_graph(&self) -> Result<FlatGraph> {
        let n = self.len();
        let cap = self.partitions.iter().map(|p| p.graph.cap()).max().unwrap_or(1);
        let mut g = FlatGraph::new(n, cap)?;
        for p in &self.partitions {
            for (local, &global) in p.members.iter().enumerate() {
                let list = p
                    .graph
                    .neighbors(local as NodeId)
                    .iter()
                    .map(|&v| p.members[v as usize])
                    .collect();
                g.set_neighbors(global, list)?;
            }
        }
        Ok(g)
    }
}

/// Any of the index shapes a builder can produce.
#[derive(Clone, Debug, PartialEq)]
pub enum Index {
    Flat(FlatGraph),
    Layered(LayeredGraph),
    Partitioned(PartitionedIndex),
}

impl Index {
    pub fn len(&self) -> usize {
        match self {
            Index::Flat(g) => g.len(),
            Index::Layered(g) => g.len(),
            Index::Partitioned(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            Index::Flat(_) => "flat",
            Index::Layered(_) => "layered",
            Index::Partitioned(p) => match p.mode {
                PartitionMode::Merged => "partitioned-merged",
                PartitionMode::Separate => "partitioned-separate",
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_graph() {
        let g = FlatGraph::new(1, 60).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.validate().is_ok());
        assert!(FlatGraph::new(0, 1).is_err());
        assert!(FlatGraph::new(1, 0).is_err());
    }

    #[test]
    fn degree_cap_enforced() {
        let mut g = FlatGraph::new(5, 2).unwrap();
        assert!(g.add_edge(0, 1).unwrap());
        assert!(g.add_edge(0, 2).unwrap());
        assert!(g.add_edge(0, 3).is_err());
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert!(!g.add_edge(0, 1).unwrap());
    }

    #[test]
    fn invalid_edges_rejected() {
        let mut g = FlatGraph::new(3, 4).unwrap();
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(0, 3).is_err());
        assert!(g.set_neighbors(0, vec![1, 1]).is_err());
        assert!(g.set_neighbors(0, vec![0]).is_err());
        assert!(g.set_neighbors(0, vec![2, 1]).is_ok());
        assert_eq!(g.neighbors(0), &[2, 1]);
    }

    #[test]
    fn layered_nesting_checked() {
        let mut base = FlatGraph::new(3, 2).unwrap();
        base.set_neighbors(0, vec![1, 2]).unwrap();
        let mut top = FlatGraph::new(3, 2).unwrap();
        top.set_neighbors(0, vec![2]).unwrap();
        top.set_neighbors(2, vec![0]).unwrap();
        let ok = LayeredGraph::new(vec![base.clone(), top.clone()], vec![1, 0, 1], 0).unwrap();
        assert_eq!(ok.members(1), vec![0, 2]);
        assert_eq!(ok.members(0), vec![0, 1, 2]);
        // node 2 at level 0 cannot have top-layer edges
        assert!(LayeredGraph::new(vec![base.clone(), top.clone()], vec![1, 0, 0], 0).is_err());
        // entry must be in the top layer
        assert!(LayeredGraph::new(vec![base, top], vec![1, 0, 1], 1).is_err());
    }

    #[test]
    fn partition_validation_and_merge() {
        let mut g0 = FlatGraph::new(2, 2).unwrap();
        g0.set_neighbors(0, vec![1]).unwrap();
        let g1 = FlatGraph::new(1, 2).unwrap();
        let idx = PartitionedIndex {
            mode: PartitionMode::Separate,
            partitions: vec![
                Partition { members: vec![2, 0], centroid: vec![0.0], graph: g0 },
                Partition { members: vec![1], centroid: vec![1.0], graph: g1 },
            ],
        };
        idx.validate(3, 1).unwrap();
        assert!(idx.validate(4, 1).is_err());
        assert!(idx.validate(3, 2).is_err());
        let m = idx.merged_graph().unwrap();
        assert_eq!(m.neighbors(2), &[0]);
        assert_eq!(m.edge_count(), 1);
    }
}
