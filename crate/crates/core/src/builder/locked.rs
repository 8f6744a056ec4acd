//! Neighbor lists behind per-node locks, for graphs under concurrent construction.

use parking_lot::{RwLock, RwLockWriteGuard};

use crate::distance::NodeId;
use crate::error::Result;
use crate::graph::{Adjacency, FlatGraph};

/// Readers copy a whole list under a shared lock; writers replace or edit it
/// under that node's exclusive lock, so a reader never sees a half-written list.
pub(crate) struct LockedLevel {
    lists: Vec<RwLock<Vec<NodeId>>>,
}

impl LockedLevel {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            lists: (0..n).map(|_| RwLock::new(Vec::new())).collect(),
        }
    }

    pub(crate) fn set(&self, u: NodeId, list: Vec<NodeId>) {
        *self.lists[u as usize].write() = list;
    }

    pub(crate) fn write(&self, u: NodeId) -> RwLockWriteGuard<'_, Vec<NodeId>> {
        self.lists[u as usize].write()
    }

    pub(crate) fn into_flat(self, cap: usize) -> Result<FlatGraph> {
        FlatGraph::from_lists(cap, self.lists.into_iter().map(RwLock::into_inner).collect())
    }
}

impl Adjacency for LockedLevel {
    fn node_count(&self) -> usize {
        self.lists.len()
    }

    fn copy_neighbors(&self, u: NodeId, out: &mut Vec<NodeId>) {
        out.clear();
        out.extend_from_slice(&self.lists[u as usize].read());
    }
}
