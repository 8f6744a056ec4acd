//! Exact k-NN by exhaustive scan: the oracle every recall figure is measured against.

use std::path::Path;

use rayon::prelude::*;

use super::{write_fvecs, write_ivecs, VectorSet, Vectors};
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};

/// Per query, the exact k nearest rows with true distances, ascending.
pub type GroundTruth = Vec<Vec<Candidate>>;

/// The `k` nearest rows of `set` to `query`, ascending by distance then id.
pub fn brute_force_knn<V: Vectors + ?Sized>(
    set: &V,
    query: &[f32],
    k: usize,
    counter: &mut DistCounter,
) -> Result<Vec<Candidate>> {
    if k == 0 || k > set.len() {
        return Err(Error::param(format!(
            "k = {k} must be within 1..={}",
            set.len()
        )));
    }
    if query.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            left: query.len(),
            right: set.dim(),
        });
    }
    let mut all: Vec<Candidate> = (0..set.len() as NodeId)
        .map(|id| Candidate::new(id, counter.squared(query, set.row(id))))
        .collect();
    if k < all.len() {
        all.select_nth_unstable(k - 1);
        all.truncate(k);
    }
    all.sort_unstable();
    for c in &mut all {
        c.dist = c.dist.sqrt();
    }
    Ok(all)
}

/// Exact k-NN for every query, computed in parallel.
pub fn ground_truth<V: Vectors + ?Sized>(
    set: &V,
    queries: &VectorSet,
    k: usize,
) -> Result<(GroundTruth, DistCounter)> {
    let rows: Vec<(Vec<Candidate>, DistCounter)> = queries
        .rows()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|q| {
            let mut counter = DistCounter::new();
            brute_force_knn(set, q, k, &mut counter).map(|r| (r, counter))
        })
        .collect::<Result<_>>()?;
    let mut total = DistCounter::new();
    let truth = rows
        .into_iter()
        .map(|(r, c)| {
            total.absorb(c);
            r
        })
        .collect();
    Ok((truth, total))
}

/// Writes ids as ivecs and distances as fvecs, one record per query.
pub fn write_ground_truth(
    truth: &GroundTruth,
    ids_path: impl AsRef<Path>,
    dists_path: impl AsRef<Path>,
) -> Result<()> {
    let ids: Vec<Vec<i32>> = truth
        .iter()
        .map(|row| row.iter().map(|c| c.id as i32).collect())
        .collect();
    write_ivecs(ids_path, &ids)?;
    let k = truth.first().map_or(0, Vec::len);
    let dists: Vec<f32> = truth.iter().flat_map(|row| row.iter().map(|c| c.dist)).collect();
    write_fvecs(dists_path, &VectorSet::new(k, dists)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_powerlaw, PowerLawSpec};

    // Independent quadratic scan: full insertion sort on f64 distances.
    fn scan_oracle(set: &VectorSet, q: &[f32], k: usize) -> Vec<u32> {
        let mut out: Vec<(f64, u32)> = Vec::new();
        for (i, row) in set.rows().enumerate() {
            let d: f64 = row
                .iter()
                .zip(q)
                .map(|(a, b)| (*a as f64 - *b as f64).powi(2))
                .sum();
            let pos = out
                .iter()
                .position(|&(od, oi)| d < od || (d == od && (i as u32) < oi))
                .unwrap_or(out.len());
            out.insert(pos, (d, i as u32));
        }
        out.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn self_match_is_first() {
        let set = gen_powerlaw(&PowerLawSpec::new(20, 3, 0.0, 1)).unwrap();
        let mut c = DistCounter::new();
        let r = brute_force_knn(&set, set.row(7), 1, &mut c).unwrap();
        assert_eq!(r, vec![Candidate::new(7, 0.0)]);
        assert_eq!(c.count(), 20);
    }

    #[test]
    fn k_equals_n_sorts_everything() {
        let set = gen_powerlaw(&PowerLawSpec::new(30, 2, 0.0, 2)).unwrap();
        let q = [0.5f32, 0.5];
        let r = brute_force_knn(&set, &q, 30, &mut DistCounter::new()).unwrap();
        assert_eq!(r.len(), 30);
        assert!(r.windows(2).all(|w| w[0].dist <= w[1].dist));
        assert!(brute_force_knn(&set, &q, 31, &mut DistCounter::new()).is_err());
        assert!(brute_force_knn(&set, &q, 0, &mut DistCounter::new()).is_err());
    }

    #[test]
    fn matches_independent_scan() {
        let set = gen_powerlaw(&PowerLawSpec::new(50, 4, 0.0, 3)).unwrap();
        let queries = gen_powerlaw(&PowerLawSpec::new(20, 4, 0.0, 4)).unwrap();
        for q in queries.rows() {
            for k in [1, 5, 50] {
                let got: Vec<u32> = brute_force_knn(&set, q, k, &mut DistCounter::new())
                    .unwrap()
                    .iter()
                    .map(|c| c.id)
                    .collect();
                assert_eq!(got, scan_oracle(&set, q, k));
            }
        }
    }

    #[test]
    fn ties_broken_by_id() {
        let set = VectorSet::new(1, vec![2.0, 0.0, 2.0, -2.0]).unwrap();
        let r = brute_force_knn(&set, &[0.0], 4, &mut DistCounter::new()).unwrap();
        assert_eq!(r.iter().map(|c| c.id).collect::<Vec<_>>(), vec![1, 0, 2, 3]);
    }

    #[test]
    fn ground_truth_files() {
        let set = gen_powerlaw(&PowerLawSpec::new(40, 3, 0.0, 5)).unwrap();
        let queries = gen_powerlaw(&PowerLawSpec::new(4, 3, 0.0, 6)).unwrap();
        let (gt, counter) = ground_truth(&set, &queries, 5).unwrap();
        assert_eq!(counter.count(), 160);
        let dir = tempfile::tempdir().unwrap();
        let (ip, dp) = (dir.path().join("gt.ivecs"), dir.path().join("gt.fvecs"));
        write_ground_truth(&gt, &ip, &dp).unwrap();
        let ids = crate::data::load_ivecs(&ip).unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(ids[2][0] as u32, gt[2][0].id);
    }
}
