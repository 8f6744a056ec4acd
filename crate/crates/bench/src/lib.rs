//! Command-line orchestration for dataset generation, index builds, and
//! recall/efficiency sweeps.

pub mod cli;
pub mod sweep;

use std::path::Path;

use anyhow::{Context, Result};
use gann_core::data::{load_vecs, VecsFormat, VectorSet};

/// Loads an fvecs or bvecs file, choosing the format from the extension.
pub fn load_vectors(path: &Path) -> Result<VectorSet> {
    let format = VecsFormat::from_path(path)
        .filter(|f| *f != VecsFormat::Ivecs)
        .ok_or_else(|| {
            gann_core::Error::Param(format!(
                "{}: expected a .fvecs or .bvecs file",
                path.display()
            ))
        })?;
    load_vecs(path, format).with_context(|| format!("loading {}", path.display()))
}
