//! Neighborhood diversification: pruning a node's candidate neighbor list.
//!
//! All strategies scan candidates in ascending distance order and keep a
//! candidate unless an already-kept neighbor "occludes" it:
//!
//! | strategy | `X_j` is pruned when some kept `X_i` has            |
//! |----------|-----------------------------------------------------|
//! | NoND     | never (plain truncation to the cap)                 |
//! | RND      | `dist(X_i, X_j) <= dist(X_q, X_j)`                  |
//! | RRND     | `alpha * dist(X_i, X_j) <= dist(X_q, X_j)`          |
//! | MOND     | `angle(X_i - X_q, X_j - X_q) < theta`               |
//!
//! The scan stops once `cap` neighbors are kept. Pruned candidates are never
//! added back to fill a short list.

use std::fmt;

use crate::data::Vectors;
use crate::distance::{Candidate, DistCounter, NodeId};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f32 = 1.2;
pub const DEFAULT_THETA_DEG: f32 = 60.0;

/// Candidates for the neighbor list of `reference`, ascending by (squared) distance then id.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateList {
    reference: NodeId,
    entries: Vec<Candidate>,
}

impl CandidateList {
    /// Validates an already-sorted list.
    pub fn new(reference: NodeId, entries: Vec<Candidate>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("candidate list must be strictly sorted by (distance, id)"));
        }
        if entries.iter().any(|c| c.id == reference) {
            return Err(Error::param("candidate list contains its own reference"));
        }
        let mut ids: Vec<NodeId> = entries.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("candidate list contains duplicate ids"));
        }
        Ok(Self { reference, entries })
    }

    /// Sorts, drops the reference, and keeps the first occurrence of each id.
    pub fn from_unsorted(reference: NodeId, mut entries: Vec<Candidate>) -> Self {
        entries.retain(|c| c.id != reference);
        entries.sort_unstable();
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        entries.retain(|c| seen.insert(c.id));
        Self { reference, entries }
    }

    pub fn reference(&self) -> NodeId {
        self.reference
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn prune_nond(c: &CandidateList, cap: usize) -> Vec<NodeId> {
    c.entries.iter().take(cap).map(|e| e.id).collect()
}

/// Greedy occlusion scan shared by the geometric strategies.
fn greedy_scan<V, F>(set: &V, c: &CandidateList, cap: usize, mut occludes: F) -> Vec<NodeId>
where
    V: Vectors + ?Sized,
    F: FnMut(&[f32], &[f32], &Candidate) -> bool,
{
    let mut kept: Vec<NodeId> = Vec::with_capacity(cap.min(c.len()));
    for cand in &c.entries {
        if kept.len() >= cap {
            break;
        }
        let xj = set.row(cand.id);
        if !kept.iter().any(|&i| occludes(set.row(i), xj, cand)) {
            kept.push(cand.id);
        }
    }
    kept
}

pub fn prune_rnd<V: Vectors + ?Sized>(
    set: &V,
    c: &CandidateList,
    cap: usize,
    counter: &mut DistCounter,
) -> Vec<NodeId> {
    greedy_scan(set, c, cap, |xi, xj, cand| counter.squared(xi, xj) <= cand.dist)
}

pub fn prune_rrnd<V: Vectors + ?Sized>(
    set: &V,
    c: &CandidateList,
    cap: usize,
    alpha: f32,
    counter: &mut DistCounter,
) -> Result<Vec<NodeId>> {
    check_alpha(alpha)?;
    // Squared distances throughout, so the factor is squared too. alpha = 1
    // multiplies by exactly 1.0 and reproduces RND bit for bit.
    let factor = alpha * alpha;
    Ok(greedy_scan(set, c, cap, |xi, xj, cand| {
        factor * counter.squared(xi, xj) <= cand.dist
    }))
}

pub fn prune_mond<V: Vectors + ?Sized>(
    set: &V,
    c: &CandidateList,
    cap: usize,
    theta_deg: f32,
    counter: &mut DistCounter,
) -> Result<Vec<NodeId>> {
    check_theta(theta_deg)?;
    let xq = set.row(c.reference);
    let theta = theta_deg as f64;
    Ok(greedy_scan(set, c, cap, |xi, xj, _| {
        counter.bump();
        angle_deg(xq, xi, xj) < theta
    }))
}

/// Angle at `origin` between `a - origin` and `b - origin`, in degrees.
/// A zero-length difference gives 0.
fn angle_deg(origin: &[f32], a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for ((&o, &x), &y) in origin.iter().zip(a).zip(b) {
        let u = x as f64 - o as f64;
        let v = y as f64 - o as f64;
        dot += u * v;
        na += u * u;
        nb += v * v;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0).acos().to_degrees()
}

fn check_alpha(alpha: f32) -> Result<()> {
    if alpha >= 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("alpha must be >= 1, got {alpha}")))
    }
}

fn check_theta(theta: f32) -> Result<()> {
    if theta > 0.0 && theta < 180.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "theta must lie strictly between 0 and 180 degrees, got {theta}"
        )))
    }
}

/// A validated diversification strategy with its parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diversifier {
    NoNd,
    Rnd,
    Rrnd { alpha: f32 },
    Mond { theta_deg: f32 },
}

impl Diversifier {
    pub fn rrnd(alpha: f32) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Diversifier::Rrnd { alpha })
    }

    pub fn mond(theta_deg: f32) -> Result<Self> {
        check_theta(theta_deg)?;
        Ok(Diversifier::Mond { theta_deg })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Diversifier::Rrnd { alpha } => check_alpha(alpha),
            Diversifier::Mond { theta_deg } => check_theta(theta_deg),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Diversifier::NoNd => "nond",
            Diversifier::Rnd => "rnd",
            Diversifier::Rrnd { .. } => "rrnd",
            Diversifier::Mond { .. } => "mond",
        }
    }

    pub fn prune<V: Vectors + ?Sized>(
        &self,
        set: &V,
        c: &CandidateList,
        cap: usize,
        counter: &mut DistCounter,
    ) -> Vec<NodeId> {
        match *self {
            Diversifier::NoNd => prune_nond(c, cap),
            Diversifier::Rnd => prune_rnd(set, c, cap, counter),
            Diversifier::Rrnd { alpha } => {
                prune_rrnd(set, c, cap, alpha, counter).expect("alpha validated at construction")
            }
            Diversifier::Mond { theta_deg } => prune_mond(set, c, cap, theta_deg, counter)
                .expect("theta validated at construction"),
        }
    }
}

impl fmt::Display for Diversifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diversifier::Rrnd { alpha } => write!(f, "rrnd({alpha})"),
            Diversifier::Mond { theta_deg } => write!(f, "mond({theta_deg})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Fraction of candidates removed: `1 - kept / before`.
pub fn pruning_ratio(before: usize, kept: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        1.0 - kept as f64 / before as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::VectorSet;
    use crate::rng::{stream, Domain};
    use rand::Rng;

    fn list_from(set: &VectorSet, reference: NodeId) -> CandidateList {
        let xq = set.row(reference);
        let mut c = DistCounter::new();
        let entries = (0..set.len() as NodeId)
            .filter(|&i| i != reference)
            .map(|i| Candidate::new(i, c.squared(xq, set.row(i))))
            .collect();
        CandidateList::from_unsorted(reference, entries)
    }

    #[test]
    fn nond_truncates() {
        let set = VectorSet::new(1, (0..11).map(|x| x as f32).collect()).unwrap();
        let c = list_from(&set, 0);
        assert_eq!(prune_nond(&c, 4), vec![1, 2, 3, 4]);
        let small = CandidateList::new(0, c.entries()[..3].to_vec()).unwrap();
        assert_eq!(prune_nond(&small, 5), vec![1, 2, 3]);
    }

    #[test]
    fn rnd_one_dimensional() {
        let set = VectorSet::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let c = list_from(&set, 0);
        assert_eq!(prune_rnd(&set, &c, 10, &mut DistCounter::new()), vec![1]);
    }

    #[test]
    fn rnd_single_and_coincident() {
        let set = VectorSet::new(1, vec![0.0, 3.0, 3.0]).unwrap();
        let c = list_from(&set, 0);
        assert_eq!(prune_rnd(&set, &c, 10, &mut DistCounter::new()), vec![1]);
        let one = CandidateList::new(0, vec![c.entries()[1]]).unwrap();
        assert_eq!(prune_rnd(&set, &one, 10, &mut DistCounter::new()), vec![2]);
    }

    #[test]
    fn rrnd_alpha_two_keeps_both() {
        let set = VectorSet::new(1, vec![0.0, 1.0, 2.5]).unwrap();
        let c = list_from(&set, 0);
        let kept = prune_rrnd(&set, &c, 10, 2.0, &mut DistCounter::new()).unwrap();
        assert_eq!(kept, vec![1, 2]);
        assert_eq!(prune_rnd(&set, &c, 10, &mut DistCounter::new()), vec![1]);
        assert!(prune_rrnd(&set, &c, 10, 0.5, &mut DistCounter::new()).is_err());
    }

    #[test]
    fn mond_angles() {
        let set = VectorSet::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.1]).unwrap();
        let c = CandidateList::from_unsorted(
            0,
            vec![Candidate::new(1, 1.0), Candidate::new(2, 1.0)],
        );
        assert_eq!(prune_mond(&set, &c, 10, 60.0, &mut DistCounter::new()).unwrap(), vec![1, 2]);
        let c = CandidateList::from_unsorted(
            0,
            vec![Candidate::new(1, 1.0), Candidate::new(3, 1.01)],
        );
        assert_eq!(prune_mond(&set, &c, 10, 60.0, &mut DistCounter::new()).unwrap(), vec![1]);
        assert!((angle_deg(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.1]) - 0.1f64.atan().to_degrees()).abs() < 1e-4);
        assert!(prune_mond(&set, &c, 10, 0.0, &mut DistCounter::new()).is_err());
        assert!(prune_mond(&set, &c, 10, 180.0, &mut DistCounter::new()).is_err());
    }

    #[test]
    fn mond_duplicate_point_is_pruned() {
        let set = VectorSet::new(2, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let c = list_from(&set, 0);
        assert_eq!(prune_mond(&set, &c, 10, 60.0, &mut DistCounter::new()).unwrap(), vec![1]);
    }

    #[test]
    fn candidate_list_validation() {
        let a = Candidate::new(1, 1.0);
        let b = Candidate::new(2, 2.0);
        assert!(CandidateList::new(0, vec![b, a]).is_err());
        assert!(CandidateList::new(1, vec![a, b]).is_err());
        assert!(CandidateList::new(0, vec![a, Candidate::new(1, 3.0)]).is_err());
        let c = CandidateList::from_unsorted(0, vec![b, a, Candidate::new(0, 0.0), Candidate::new(1, 3.0)]);
        assert_eq!(c.entries(), &[a, b]);
    }

    #[test]
    fn outputs_respect_cap_and_come_from_input() {
        let mut rng = stream(1, Domain::Sample, 0);
        let set = VectorSet::new(4, (0..4 * 80).map(|_| rng.random()).collect()).unwrap();
        let c = list_from(&set, 0);
        let strategies = [
            Diversifier::NoNd,
            Diversifier::Rnd,
            Diversifier::Rrnd { alpha: 1.2 },
            Diversifier::Mond { theta_deg: 60.0 },
        ];
        for s in strategies {
            for cap in [1, 5, 100] {
                let kept = s.prune(&set, &c, cap, &mut DistCounter::new());
                assert!(kept.len() <= cap);
                assert!(!kept.contains(&0));
                assert!(kept.iter().all(|id| c.entries().iter().any(|e| e.id == *id)));
            }
        }
    }

    #[test]
    fn diversifier_constructors() {
        assert!(Diversifier::rrnd(0.99).is_err());
        assert!(Diversifier::mond(200.0).is_err());
        assert_eq!(Diversifier::rrnd(1.2).unwrap().to_string(), "rrnd(1.2)");
        assert_eq!(pruning_ratio(10, 4), 0.6);
        assert_eq!(pruning_ratio(0, 0), 0.0);
    }
}
