//! Euclidean distance kernel and the distance-calculation counter.
//!
//! Search and pruning compare squared distances; reported distances and the
//! complexity metrics use true distances. Both go through [`DistCounter`], which
//! counts one evaluation per call.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Row index of a vector in its [`VectorSet`](crate::data::VectorSet).
pub type NodeId = u32;

/// Number of full d-dimensional distance evaluations in one query or build scope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistCounter {
    count: u64,
}

impl DistCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Folds another scope's total into this one.
    pub fn absorb(&mut self, other: DistCounter) {
        self.count += other.count;
    }

    /// Counted squared distance. Panics if the slices differ in length.
    #[inline]
    pub fn squared(&mut self, a: &[f32], b: &[f32]) -> f32 {
        assert_eq!(a.len(), b.len(), "distance between vectors of different dimension");
        self.count += 1;
        l2_squared(a, b)
    }

    /// Counted true (square-rooted) distance.
    #[inline]
    pub fn distance(&mut self, a: &[f32], b: &[f32]) -> f32 {
        self.squared(a, b).sqrt()
    }

    /// Counts one full-dimensional pass not expressed as a distance (MOND angles).
    #[inline]
    pub(crate) fn bump(&mut self) {
        self.count += 1;
    }
}

/// `sqrt(sum_j (a_j - b_j)^2)`, incrementing `counter` by one.
pub fn euclidean(a: &[f32], b: &[f32], counter: &mut DistCounter) -> Result<f32> {
    Ok(squared_euclidean(a, b, counter)?.sqrt())
}

/// `sum_j (a_j - b_j)^2`, incrementing `counter` by one.
pub fn squared_euclidean(a: &[f32], b: &[f32], counter: &mut DistCounter) -> Result<f32> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(counter.squared(a, b))
}

// Eight independent accumulators let the compiler vectorize the loop.
#[inline]
fn l2_squared(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f32 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..8 {
            let d = ca[i] - cb[i];
            acc[i] += d * d;
        }
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// A node paired with its distance to some reference (query or node being wired).
///
/// Inside search and pruning `dist` holds the squared distance. Ordering is by
/// distance, then by id, so every sort in the crate breaks ties the same way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: NodeId,
    pub dist: f32,
}

impl Candidate {
    pub fn new(id: NodeId, dist: f32) -> Self {
        Self { id, dist }
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.id.cmp(&other.id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use proptest::prelude::*;
    use rand::Rng;

    fn scalar_reference(a: &[f32], b: &[f32]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn three_four_five() {
        let mut c = DistCounter::new();
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0], &mut c).unwrap(), 5.0);
        assert_eq!(squared_euclidean(&[0.0, 0.0], &[3.0, 4.0], &mut c).unwrap(), 25.0);
        assert_eq!(c.count(), 2);
    }

    #[test]
    fn identity_is_zero() {
        let mut c = DistCounter::new();
        let x = [1.5f32, -2.0, 7.25, 0.0, 3.0];
        assert_eq!(euclidean(&x, &x, &mut c).unwrap(), 0.0);
        assert_eq!(squared_euclidean(&x, &x, &mut c).unwrap(), 0.0);
    }

    #[test]
    fn matches_scalar_loop_d8() {
        let mut rng = stream(11, Domain::Sample, 0);
        let mut c = DistCounter::new();
        for _ in 0..100 {
            let a: Vec<f32> = (0..8).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f32> = (0..8).map(|_| rng.random_range(-10.0..10.0)).collect();
            let got = euclidean(&a, &b, &mut c).unwrap() as f64;
            let want = scalar_reference(&a, &b);
            assert!((got - want).abs() <= 1e-6 * want.max(1e-12), "{got} vs {want}");
        }
        assert_eq!(c.count(), 100);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let mut c = DistCounter::new();
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0], &mut c),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
        assert!(squared_euclidean(&[], &[], &mut c).is_err());
        assert_eq!(c.count(), 0);
    }

    #[test]
    fn squared_sort_matches_true_sort() {
        let mut rng = stream(5, Domain::Sample, 1);
        let q: Vec<f32> = (0..6).map(|_| rng.random()).collect();
        let pts: Vec<Vec<f32>> = (0..10)
            .map(|_| (0..6).map(|_| rng.random()).collect())
            .collect();
        let mut c = DistCounter::new();
        let mut by_sq: Vec<Candidate> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| Candidate::new(i as u32, squared_euclidean(&q, p, &mut c).unwrap()))
            .collect();
        let mut by_true: Vec<Candidate> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| Candidate::new(i as u32, euclidean(&q, p, &mut c).unwrap()))
            .collect();
        by_sq.sort();
        by_true.sort();
        let ids = |v: &[Candidate]| v.iter().map(|c| c.id).collect::<Vec<_>>();
        assert_eq!(ids(&by_sq), ids(&by_true));
    }

    fn vec3() -> impl Strategy<Value = Vec<f32>> {
        prop::collection::vec(-100.0f32..100.0, 7)
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle(a in vec3(), b in vec3(), c in vec3()) {
            let mut k = DistCounter::new();
            let ab = euclidean(&a, &b, &mut k).unwrap();
            let ba = euclidean(&b, &a, &mut k).unwrap();
            let bc = euclidean(&b, &c, &mut k).unwrap();
            let ac = euclidean(&a, &c, &mut k).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-5) + 1e-5);
            prop_assert!(ab >= 0.0);
        }
    }
}
