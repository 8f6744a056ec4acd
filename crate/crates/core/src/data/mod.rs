//! Datasets, synthetic workloads, the brute-force oracle, and complexity metrics.

mod complexity;
mod groundtruth;
mod synth;
mod vecs;

pub use complexity::{
    complexity_report, lid, lid_from_distances, lrc, ComplexityReport, QueryComplexity,
    DEFAULT_COMPLEXITY_K,
};
pub use groundtruth::{brute_force_knn, ground_truth, write_ground_truth, GroundTruth};
pub use synth::{
    gen_noise_queries, gen_powerlaw, noise_label, sample_query_indices, NoiseSpec, PowerLawSpec,
};
pub use vecs::{load_ivecs, load_vecs, write_fvecs, write_ivecs, VecsFormat};

use crate::distance::NodeId;
use crate::error::{Error, Result};

/// Read access to a collection of equal-length vectors addressed by [`NodeId`].
pub trait Vectors: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn row(&self, id: NodeId) -> &[f32];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense row-major `n x d` single-precision dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    dim: usize,
    values: Vec<f32>,
}

impl VectorSet {
    pub fn new(dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} values do not form whole rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite value in row {}",
                pos / dim
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::param("rows have differing dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// Copies the listed rows into a new set.
    pub fn select(&self, ids: &[NodeId]) -> Result<Self> {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            if id as usize >= self.len() {
                return Err(Error::param(format!("row {id} out of range")));
            }
            values.extend_from_slice(self.row(id));
        }
        Self::new(self.dim, values)
    }

    /// Component-wise mean of all rows.
    pub fn centroid(&self) -> Vec<f32> {
        mean_of(self, (0..self.len() as NodeId).collect::<Vec<_>>().as_slice())
    }
}

impl Vectors for VectorSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    #[inline]
    fn row(&self, id: NodeId) -> &[f32] {
        let start = id as usize * self.dim;
        &self.values[start..start + self.dim]
    }
}

/// A view over selected rows of another collection, re-addressed `0..members.len()`.
#[derive(Clone, Copy)]
pub struct SubsetView<'a, V: Vectors + ?Sized> {
    pub parent: &'a V,
    pub members: &'a [NodeId],
}

impl<'a, V: Vectors + ?Sized> SubsetView<'a, V> {
    pub fn new(parent: &'a V, members: &'a [NodeId]) -> Self {
        Self { parent, members }
    }
}

impl<V: Vectors + ?Sized> Vectors for SubsetView<'_, V> {
    fn dim(&self) -> usize {
        self.parent.dim()
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    fn row(&self, id: NodeId) -> &[f32] {
        self.parent.row(self.members[id as usize])
    }
}

/// Mean of the given rows, accumulated in f64.
pub fn mean_of<V: Vectors + ?Sized>(set: &V, ids: &[NodeId]) -> Vec<f32> {
    let mut acc = vec![0.0f64; set.dim()];
    for &id in ids {
        for (a, &v) in acc.iter_mut().zip(set.row(id)) {
            *a += v as f64;
        }
    }
    let n = ids.len().max(1) as f64;
    acc.into_iter().map(|a| (a / n) as f32).collect()
}
