//! Raw little-endian float64 planes for depth, z, and visibility dumps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn encode(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "plane: {} bytes is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save(values: &[f64], path: &Path) -> Result<()> {
    super::write_atomic(path, &encode(values))
}

pub fn load(path: &Path) -> Result<Vec<f64>> {
    decode(&fs::read(path)?)
}
