//! Blendshape model files: a `.bsm` text manifest (V, T, K_id, K_exp)
//! next to a `.bin` blob holding little-endian f64 values in the order
//! mean shape, identity basis, expression basis (each basis column-block
//! major: all V vertices of column 0, then column 1, ...), followed by
//! the T x 3 little-endian u32 triangle indices.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::morphable_model::{Basis, BlendshapeModel};

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

pub fn encode(model: &BlendshapeModel) -> (String, Vec<u8>) {
    let manifest = format!(
        "V {}\nT {}\nK_id {}\nK_exp {}\n",
        model.vertex_count(),
        model.triangle_count(),
        model.id_basis().rank(),
        model.exp_basis().rank()
    );
    let v = model.vertex_count();
    let floats = 3 * v * (1 + model.id_basis().rank() + model.exp_basis().rank());
    let mut blob = Vec::with_capacity(floats * 8 + model.triangle_count() * 12);
    let push_points = |points: &[Vector3<f64>], blob: &mut Vec<u8>| {
        for p in points {
            for axis in 0..3 {
                blob.extend_from_slice(&p[axis].to_le_bytes());
            }
        }
    };
    push_points(model.mean_shape(), &mut blob);
    for basis in [model.id_basis(), model.exp_basis()] {
        for col in basis.columns() {
            push_points(col, &mut blob);
        }
    }
    for tri in model.triangles().iter() {
        for &i in tri {
            blob.extend_from_slice(&i.to_le_bytes());
        }
    }
    (manifest, blob)
}

pub fn decode(manifest: &str, blob: &[u8]) -> Result<BlendshapeModel> {
    let mut v = None;
    let mut t = None;
    let mut k_id = None;
    let mut k_exp = None;
    for line in manifest.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("model manifest: bad line {line:?}")))?;
        match key {
            "V" => v = Some(value),
            "T" => t = Some(value),
            "K_id" => k_id = Some(value),
            "K_exp" => k_exp = Some(value),
            other => return Err(Error::Format(format!("model manifest: unknown key {other}"))),
        }
    }
    let (v, t, k_id, k_exp) = match (v, t, k_id, k_exp) {
        (Some(v), Some(t), Some(k_id), Some(k_exp)) => (v, t, k_id, k_exp),
        _ => return Err(Error::Format("model manifest: missing keys".into())),
    };
    let float_count = 3 * v * (1 + k_id + k_exp);
    let expected = float_count * 8 + t * 12;
    if blob.len() != expected {
        return Err(Error::Format(format!(
            "model blob: expected {expected} bytes, got {}",
            blob.len()
        )));
    }
    let mut offset = 0usize;
    let read_points = |count: usize, offset: &mut usize| -> Vec<Vector3<f64>> {
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let mut coords = [0.0; 3];
            for c in coords.iter_mut() {
                *c = f64::from_le_bytes(blob[*offset..*offset + 8].try_into().unwrap());
                *offset += 8;
            }
            points.push(Vector3::new(coords[0], coords[1], coords[2]));
        }
        points
    };
    let mean = read_points(v, &mut offset);
    let id_cols = (0..k_id).map(|_| read_points(v, &mut offset)).collect();
    let exp_cols = (0..k_exp).map(|_| read_points(v, &mut offset)).collect();
    let mut triangles = Vec::with_capacity(t);
    for _ in 0..t {
        let mut tri = [0u32; 3];
        for i in tri.iter_mut() {
            *i = u32::from_le_bytes(blob[offset..offset + 4].try_into().unwrap());
            offset += 4;
        }
        triangles.push(tri);
    }
    BlendshapeModel::new(mean, Basis::new(id_cols), Basis::new(exp_cols), triangles)
}

/// Writes `<path>` (manifest) and the sibling `.bin` blob.
pub fn save(model: &BlendshapeModel, path: &Path) -> Result<()> {
    let (manifest, blob) = encode(model);
    super::write_atomic(&blob_path(path), &blob)?;
    super::write_atomic(path, manifest.as_bytes())
}

pub fn load(path: &Path) -> Result<BlendshapeModel> {
    let manifest = fs::read_to_string(path)?;
    let blob = fs::read(blob_path(path))?;
    decode(&manifest, &blob)
}
