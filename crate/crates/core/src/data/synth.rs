//! Synthetic power-law datasets and Gaussian-noise query workloads.

use rand::seq::index;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{VectorSet, Vectors};
use crate::distance::NodeId;
use crate::error::{Error, Result};
use crate::rng::{open_unit, stream, Domain};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawSpec {
    pub n: usize,
    pub d: usize,
    pub exponent_a: f64,
    pub scale_k: f64,
    pub seed: u64,
}

impl PowerLawSpec {
    pub fn new(n: usize, d: usize, exponent_a: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            exponent_a,
            scale_k: 1.0,
            seed,
        }
    }
}

/// Draws `Y = k * X^(1 + a)` per coordinate with `X ~ U(0, 1)`.
///
/// Exponent 0 is the uniform distribution on `(0, k)`; skewness grows with `a`.
/// Row `i` draws its coordinates in order from stream `i`.
pub fn gen_powerlaw(spec: &PowerLawSpec) -> Result<VectorSet> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::param("power-law set needs n >= 1 and d >= 1"));
    }
    if !(spec.exponent_a >= 0.0) || !(spec.scale_k > 0.0) {
        return Err(Error::param("exponent must be >= 0 and scale > 0"));
    }
    let power = 1.0 + spec.exponent_a;
    let mut values = vec![0.0f32; spec.n * spec.d];
    values
        .par_chunks_mut(spec.d)
        .enumerate()
        .for_each(|(row, out)| {
            let mut rng = stream(spec.seed, Domain::PowerLaw, row as u64);
            for v in out {
                *v = (spec.scale_k * open_unit(&mut rng).powf(power)) as f32;
            }
        });
    VectorSet::new(spec.d, values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

/// Label used for a workload of the given noise variance (`0.01` is `"1%"`).
pub fn noise_label(variance: f64) -> String {
    let pct = 100.0 * variance;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        format!("{pct}%")
    }
}

/// Picks `count` distinct rows of an `n`-row set to seed a query workload.
pub fn sample_query_indices(n: usize, count: usize, seed: u64) -> Result<Vec<NodeId>> {
    if count > n {
        return Err(Error::param(format!(
            "cannot sample {count} distinct queries from {n} rows"
        )));
    }
    let mut rng = stream(seed, Domain::QuerySample, 0);
    Ok(index::sample(&mut rng, n, count)
        .into_iter()
        .map(|i| i as NodeId)
        .collect())
}

/// Query `i` is `base[indices[i]]` plus i.i.d. `N(0, variance)` noise drawn from stream `i`.
pub fn gen_noise_queries<V: Vectors + ?Sized>(
    base: &V,
    indices: &[NodeId],
    spec: &NoiseSpec,
) -> Result<VectorSet> {
    if !(spec.variance >= 0.0) {
        return Err(Error::param("noise variance must be >= 0"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i as usize >= base.len()) {
        return Err(Error::param(format!("query source row {bad} out of range")));
    }
    let d = base.dim();
    let normal = Normal::new(0.0f64, spec.variance.sqrt())
        .map_err(|e| Error::param(e.to_string()))?;
    let mut values = vec![0.0f32; indices.len() * d];
    values
        .par_chunks_mut(d)
        .zip(indices.par_iter())
        .enumerate()
        .for_each(|(qi, (out, &src))| {
            out.copy_from_slice(base.row(src));
            if spec.variance > 0.0 {
                let mut rng = stream(spec.seed, Domain::Noise, qi as u64);
                for v in out {
                    *v = (*v as f64 + normal.sample(&mut rng)) as f32;
                }
            }
        });
    VectorSet::new(d, values)
}
