//! Middlebury `.flo` optical flow files: the float magic 202021.25
//! (bytes "PIEH"), little-endian i32 width and height, then row-major
//! (u, v) float32 pairs.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FLO_MAGIC: f32 = 202021.25;

pub fn encode(width: usize, height: usize, flow: &[[f32; 2]]) -> Result<Vec<u8>> {
    if flow.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "flow has {} vectors, expected {}x{}",
            flow.len(),
            width,
            height
        )));
    }
    let mut out = Vec::with_capacity(12 + flow.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(width as i32).to_le_bytes());
    out.extend_from_slice(&(height as i32).to_le_bytes());
    for v in flow {
        out.extend_from_slice(&v[0].to_le_bytes());
        out.extend_from_slice(&v[1].to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<[f32; 2]>)> {
    if bytes.len() < 12 {
        return Err(Error::Format("flo: file shorter than header".into()));
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(Error::Format(format!("flo: bad magic {magic}")));
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(Error::Format(format!("flo: bad size {width}x{height}")));
    }
    let (w, h) = (width as usize, height as usize);
    let need = 12 + w * h * 8;
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "flo: expected {need} bytes for {w}x{h}, got {}",
            bytes.len()
        )));
    }
    let flow = bytes[12..]
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes(c[0..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..8].try_into().unwrap()),
            ]
        })
        .collect();
    Ok((w, h, flow))
}

pub fn save(width: usize, height: usize, flow: &[[f32; 2]], path: &Path) -> Result<()> {
    super::write_atomic(path, &encode(width, height, flow)?)
}

pub fn load(path: &Path) -> Result<(usize, usize, Vec<[f32; 2]>)> {
    decode(&fs::read(path)?)
}
