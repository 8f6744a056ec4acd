//! Local intrinsic dimensionality (LID) and local relative contrast (LRC).
//!
//! Both are per-query hardness measures computed from exact neighbor distances.
//! Lower LID and higher LRC mean an easier query.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{brute_force_knn, VectorSet, Vectors};
use crate::distance::{DistCounter, NodeId};
use crate::error::{Error, Result};

pub const DEFAULT_COMPLEXITY_K: usize = 100;

/// LID from ascending neighbor distances.
///
/// Zero distances are dropped first (log 0 diverges). With fewer than two
/// distances left, or when all remaining distances are equal, the estimate is
/// `+inf`.
pub fn lid_from_distances(dists: &[f64]) -> f64 {
    let nonzero: Vec<f64> = dists.iter().copied().filter(|&d| d > 0.0).collect();
    if nonzero.len() < 2 {
        return f64::INFINITY;
    }
    let farthest = nonzero.iter().copied().fold(0.0, f64::max);
    let mean_log = nonzero.iter().map(|d| (d / farthest).ln()).sum::<f64>() / nonzero.len() as f64;
    if mean_log == 0.0 {
        f64::INFINITY
    } else {
        -1.0 / mean_log
    }
}

pub fn lid<V: Vectors + ?Sized>(
    query: &[f32],
    set: &V,
    k: usize,
    counter: &mut DistCounter,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("LID needs k >= 2"));
    }
    let knn = brute_force_knn(set, query, k, counter)?;
    let dists: Vec<f64> = knn.iter().map(|c| c.dist as f64).collect();
    Ok(lid_from_distances(&dists))
}

/// Mean distance to every row divided by the distance to the k-th nearest.
pub fn lrc<V: Vectors + ?Sized>(
    query: &[f32],
    set: &V,
    k: usize,
    counter: &mut DistCounter,
) -> Result<f64> {
    let knn = brute_force_knn(set, query, k, counter)?;
    lrc_from_parts(query, set, knn[k - 1].dist as f64, counter)
}

fn lrc_from_parts<V: Vectors + ?Sized>(
    query: &[f32],
    set: &V,
    kth: f64,
    counter: &mut DistCounter,
) -> Result<f64> {
    if kth <= 0.0 {
        return Err(Error::param(
            "k-th neighbor distance is 0: query duplicates at least k rows",
        ));
    }
    let total: f64 = (0..set.len() as NodeId)
        .map(|id| counter.distance(query, set.row(id)) as f64)
        .sum();
    Ok(total / set.len() as f64 / kth)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryComplexity {
    pub lid: f64,
    pub lrc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub k: usize,
    pub queries: Vec<QueryComplexity>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

impl ComplexityReport {
    /// Mean LID over queries with a finite estimate.
    pub fn mean_lid(&self) -> f64 {
        let finite: Vec<f64> = self.queries.iter().map(|q| q.lid).filter(|x| x.is_finite()).collect();
        finite.iter().sum::<f64>() / finite.len() as f64
    }

    pub fn median_lid(&self) -> f64 {
        median(self.queries.iter().map(|q| q.lid).collect())
    }

    pub fn mean_lrc(&self) -> f64 {
        self.queries.iter().map(|q| q.lrc).sum::<f64>() / self.queries.len() as f64
    }

    pub fn median_lrc(&self) -> f64 {
        median(self.queries.iter().map(|q| q.lrc).collect())
    }

    /// CSV with header `query_id,lid,lrc`; infinite LID is written as `inf`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "query_id,lid,lrc")?;
        for (i, q) in self.queries.iter().enumerate() {
            writeln!(out, "{i},{},{}", q.lid, q.lrc)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// LID and LRC for every query, sharing one exact k-NN scan per query.
pub fn complexity_report<V: Vectors + ?Sized>(
    set: &V,
    queries: &VectorSet,
    k: usize,
) -> Result<ComplexityReport> {
    if k < 2 {
        return Err(Error::param("complexity report needs k >= 2"));
    }
    let rows = queries
        .rows()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|q| {
            let mut counter = DistCounter::new();
            let knn = brute_force_knn(set, q, k, &mut counter)?;
            let dists: Vec<f64> = knn.iter().map(|c| c.dist as f64).collect();
            Ok(QueryComplexity {
                lid: lid_from_distances(&dists),
                lrc: lrc_from_parts(q, set, dists[k - 1], &mut counter)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexityReport { k, queries: rows })
}
