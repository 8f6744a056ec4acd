//! Recall and efficiency sweeps over beam widths and probe counts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use gann_core::data::{load_ivecs, Vectors, VectorSet};
use gann_core::graph::{load_index, IndexFile};
use gann_core::search::{recall, Scratch, SearchParams, Searcher};
use gann_core::seeds::{SeedIndex, SeedParams, SeedStrategy};
use gann_core::{DistCounter, NodeId};

pub const DEFAULT_REPEATS: usize = 6;
/// Runs dropped from each end of the latency ranking.
pub const TRIM: usize = 2;

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub index: PathBuf,
    pub data: PathBuf,
    pub queries: PathBuf,
    pub gt_ids: PathBuf,
    pub k: usize,
    pub l_list: Vec<usize>,
    pub nprobe_list: Vec<usize>,
    /// Replaces the stored seed structure when set.
    pub ss: Option<SeedStrategy>,
    /// Seeds per query; defaults to the beam width.
    pub s: Option<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub parallel_probes: bool,
}

/// One CSV row. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub nd: String,
    pub ss: String,
    pub beam_l: usize,
    pub nprobe: usize,
    pub recall: f64,
    pub distance_calcs: f64,
    pub latency_mean_s: f64,
    pub latency_p99_s: f64,
}

/// Loaded inputs of a sweep, reusable across parameter settings.
pub struct Workload {
    pub file: IndexFile,
    pub data: VectorSet,
    pub queries: VectorSet,
    pub truth: Vec<Vec<NodeId>>,
}

impl Workload {
    pub fn load(spec: &SweepSpec) -> Result<Self> {
        let file = load_index(&spec.index).with_context(|| format!("loading {}", spec.index.display()))?;
        let data = crate::load_vectors(&spec.data)?;
        let queries = crate::load_vectors(&spec.queries)?;
        let truth = load_truth(&spec.gt_ids)?;
        Ok(Self { file, data, queries, truth })
    }
}

fn load_truth(path: &Path) -> Result<Vec<Vec<NodeId>>> {
    let rows = load_ivecs(path).with_context(|| format!("loading {}", path.display()))?;
    rows.into_iter()
        .map(|r| {
            r.into_iter()
                .map(|id| NodeId::try_from(id).context("negative id in ground truth"))
                .collect()
        })
        .collect()
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let w = Workload::load(spec)?;
    sweep_workload(spec, &w)
}

pub fn sweep_workload(spec: &SweepSpec, w: &Workload) -> Result<Vec<SweepRow>> {
    let n = w.data.len();
    if w.file.dim != w.data.dim() || w.queries.dim() != w.data.dim() {
        bail!(
            "dimension mismatch: index {}, data {}, queries {}",
            w.file.dim,
            w.data.dim(),
            w.queries.dim()
        );
    }
    if w.file.index.len() != n {
        bail!("index covers {} nodes but the data has {n}", w.file.index.len());
    }
    if w.truth.len() < w.queries.len() {
        bail!("ground truth has {} rows for {} queries", w.truth.len(), w.queries.len());
    }
    if let Some(row) = w.truth.iter().take(w.queries.len()).find(|r| r.len() < spec.k) {
        bail!("ground truth rows hold {} ids, fewer than k = {}", row.len(), spec.k);
    }
    if spec.l_list.is_empty() || spec.nprobe_list.is_empty() {
        return Err(usage("beam width and nprobe lists must be non-empty"));
    }
    if let Some(&l) = spec.l_list.iter().find(|&&l| l < spec.k) {
        return Err(usage(&format!("beam width {l} is below k = {}", spec.k)));
    }
    if spec.repeats == 0 {
        return Err(usage("repeats must be >= 1"));
    }

    let seeds = match (spec.ss, &w.file.seeds) {
        (Some(ss), _) => {
            let params = SeedParams::with_seed(spec.seed);
            SeedIndex::build(ss, &w.data, &params, &mut DistCounter::new())?
        }
        (None, Some(stored)) => stored.clone(),
        (None, None) => return Err(usage("index file has no seed structure; pass --ss")),
    };
    let searcher = Searcher::new(&w.data, &w.file.index, &seeds)?;
    let meta = w.file.meta.clone().unwrap_or_default();
    let mut scratch = Scratch::new(n);
    let mut rows = Vec::new();
    for &l in &spec.l_list {
        for &nprobe in &spec.nprobe_list {
            let p = SearchParams {
                k: spec.k,
                beam_l: l,
                seed_count: spec.s.unwrap_or(l),
                nprobe,
                parallel_probes: spec.parallel_probes,
            };
            p.validate()?;
            // untimed pass: recall and distance counts, and a cache warm-up
            let mut recall_sum = 0.0;
            let mut calcs = 0u64;
            for (i, q) in w.queries.rows().enumerate() {
                let r = searcher.search(q, i as u64, &p, &mut scratch)?;
                recall_sum += recall(&r.ids(), w.truth[i].iter().copied(), spec.k);
                calcs += r.distance_calcs;
            }
            let mut runs: Vec<Vec<f64>> = Vec::with_capacity(spec.repeats);
            for _ in 0..spec.repeats {
                let mut lat = Vec::with_capacity(w.queries.len());
                for (i, q) in w.queries.rows().enumerate() {
                    let t = Instant::now();
                    let r = searcher.search(q, i as u64, &p, &mut scratch)?;
                    lat.push(t.elapsed().as_secs_f64());
                    std::hint::black_box(r);
                }
                runs.push(lat);
            }
            let (mean, p99) = trimmed_latency(runs);
            let nq = w.queries.len() as f64;
            rows.push(SweepRow {
                method: meta.method.clone(),
                nd: meta.nd.clone(),
                ss: seeds.strategy().label().to_string(),
                beam_l: l,
                nprobe,
                recall: recall_sum / nq,
                distance_calcs: calcs as f64 / nq,
                latency_mean_s: mean,
                latency_p99_s: p99,
            });
        }
    }
    Ok(rows)
}

/// Drops the `TRIM` fastest and slowest runs (by total time) when enough remain,
/// then returns the mean and nearest-rank 99th percentile of per-query latency.
pub fn trimmed_latency(mut runs: Vec<Vec<f64>>) -> (f64, f64) {
    runs.sort_by(|a, b| a.iter().sum::<f64>().total_cmp(&b.iter().sum::<f64>()));
    let kept: &[Vec<f64>] = if runs.len() > 2 * TRIM {
        &runs[TRIM..runs.len() - TRIM]
    } else {
        &runs
    };
    let mut all: Vec<f64> = kept.iter().flatten().copied().collect();
    if all.is_empty() {
        return (0.0, 0.0);
    }
    all.sort_by(f64::total_cmp);
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let rank = ((0.99 * all.len() as f64).ceil() as usize).clamp(1, all.len());
    (mean, all[rank - 1])
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record([
            "method", "nd", "ss", "beam_l", "nprobe", "recall", "distance_calcs", "latency_mean_s", "latency_p99_s",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn usage(msg: &str) -> anyhow::Error {
    gann_core::Error::Param(msg.to_string()).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimming_keeps_middle_runs() {
        let runs = vec![
            vec![1.0, 1.0],
            vec![9.0, 9.0],
            vec![2.0, 2.0],
            vec![8.0, 8.0],
            vec![3.0, 5.0],
            vec![4.0, 4.0],
        ];
        let (mean, p99) = trimmed_latency(runs);
        assert_eq!(mean, 4.0);
        assert_eq!(p99, 5.0);
    }

    #[test]
    fn few_runs_are_not_trimmed() {
        let (mean, p99) = trimmed_latency(vec![vec![1.0], vec![3.0]]);
        assert_eq!((mean, p99), (2.0, 3.0));
    }
}
