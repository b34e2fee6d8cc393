//! `sample-stats`: run seeded triplet draws against a manifest and print
//! the summary.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use faceflow::sampling::{sample_stats, DatasetManifest};

pub fn run(manifest_path: &Path, sigma: f64, seed: u64, count: usize) -> Result<()> {
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest = DatasetManifest::from_json(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let stats =
        sample_stats(&manifest, sigma, seed, count).map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("{}", serde_json::to_string(&stats)?);
    Ok(())
}
