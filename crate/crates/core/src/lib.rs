//! Graph-based approximate nearest-neighbor search, built from swappable parts.
//!
//! The toolkit separates the design choices that graph ANN indexes combine:
//!
//! - [`seeds`]: how a search picks its starting nodes (hierarchical layers, K-D
//!   trees, balanced k-means trees, medoid, fixed random, per-query random).
//! - [`diversify`]: how candidate neighbor lists are pruned (none, RND, relaxed
//!   RND, angle-based).
//! - [`builder`]: how the graph is constructed (incremental insertion,
//!   NN-Descent, ND refinement, divide-and-conquer).
//! - [`search`]: beam search and the full query pipeline.
//!
//! Every full-dimensional distance evaluation goes through [`distance`] and is
//! counted exactly, so builds and queries report comparable cost figures.

// `!(x > y)` is how parameter checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builder;
pub mod data;
pub mod distance;
pub mod diversify;
pub mod error;
pub mod graph;
pub mod rng;
pub mod search;
pub mod seeds;

pub use distance::{euclidean, squared_euclidean, Candidate, DistCounter, NodeId};
pub use error::{Error, Result};
