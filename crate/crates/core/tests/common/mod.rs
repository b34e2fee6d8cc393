//! Shared fixture builders for the integration suites.
//!
//! Each test target compiles this module separately and uses a different
//! subset of it.
#![allow(dead_code)]

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use faceflow::morphable_model::{Basis, BlendshapeModel, Coefficients, TextureMap};
use faceflow::rasterizer::rasterize_projected;
use faceflow::temporal_flow::FramePairGeometry;

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn random_point(rng: &mut Pcg64, span: f64) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(-span..span),
        rng.random_range(-span..span),
        rng.random_range(-span..span),
    )
}

/// Small random blendshape model with a single valid triangle fan.
pub fn random_model(rng: &mut Pcg64, v: usize, k_id: usize, k_exp: usize) -> BlendshapeModel {
    let mean = (0..v).map(|_| random_point(rng, 1.0)).collect();
    let id = Basis::new(
        (0..k_id)
            .map(|_| (0..v).map(|_| random_point(rng, 1.0)).collect())
            .collect(),
    );
    let exp = Basis::new(
        (0..k_exp)
            .map(|_| (0..v).map(|_| random_point(rng, 1.0)).collect())
            .collect(),
    );
    let triangles = (0..v - 2).map(|i| [0, (i + 1) as u32, (i + 2) as u32]).collect();
    BlendshapeModel::new(mean, id, exp, triangles).unwrap()
}

pub fn random_coefficients(rng: &mut Pcg64, model: &BlendshapeModel) -> Coefficients {
    Coefficients {
        alpha_id: (0..model.id_basis().rank())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect(),
        alpha_exp: (0..model.exp_basis().rank())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect(),
    }
}

/// Random projected triangle soup over (and slightly beyond) a WxH frame.
pub fn random_projected_scene(
    rng: &mut Pcg64,
    triangle_count: usize,
    width: usize,
    height: usize,
) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let mut vertices = Vec::with_capacity(triangle_count * 3);
    let mut triangles = Vec::with_capacity(triangle_count);
    for t in 0..triangle_count {
        for _ in 0..3 {
            vertices.push(Vector3::new(
                rng.random_range(-8.0..width as f64 + 8.0),
                rng.random_range(-8.0..height as f64 + 8.0),
                rng.random_range(-2.0..2.0),
            ));
        }
        let base = (t * 3) as u32;
        triangles.push([base, base + 1, base + 2]);
    }
    (vertices, triangles)
}

pub fn gray_texture(vertex_count: usize) -> TextureMap {
    TextureMap::constant(vertex_count, [0.5, 0.5, 0.5]).unwrap()
}

/// Rasterizes both frames of a projected vertex pair into a geometry
/// bundle.
pub fn geometry_from_projected(
    verts_t: Vec<Vector3<f64>>,
    verts_prev: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    width: usize,
    height: usize,
) -> FramePairGeometry {
    let tex = gray_texture(verts_t.len());
    let raster_t = rasterize_projected(&verts_t, &triangles, &tex, width, height).unwrap();
    let raster_prev = rasterize_projected(&verts_prev, &triangles, &tex, width, height).unwrap();
    FramePairGeometry::new(raster_t, raster_prev, verts_t, verts_prev, triangles).unwrap()
}

/// Independent per-pixel rasterization oracle: barycentrics by Cramer's
/// rule, inclusive coverage, winner = max interpolated z (first triangle
/// wins ties).
pub struct OracleRaster {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<u8>,
    pub depth: Vec<f64>,
    pub winner: Vec<i32>,
}

pub fn oracle_barycentric(
    p: (f64, f64),
    v0: &Vector3<f64>,
    v1: &Vector3<f64>,
    v2: &Vector3<f64>,
) -> Option<[f64; 3]> {
    let d1 = (v0.x - v2.x, v0.y - v2.y);
    let d2 = (v1.x - v2.x, v1.y - v2.y);
    let b = (p.0 - v2.x, p.1 - v2.y);
    let det = d1.0 * d2.1 - d2.0 * d1.1;
    if det == 0.0 {
        return None;
    }
    let l0 = (b.0 * d2.1 - d2.0 * b.1) / det;
    let l1 = (d1.0 * b.1 - b.0 * d1.1) / det;
    Some([l0, l1, 1.0 - l0 - l1])
}

pub fn oracle_rasterize(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    width: usize,
    height: usize,
) -> OracleRaster {
    let mut out = OracleRaster {
        width,
        height,
        mask: vec![0; width * height],
        depth: vec![f64::NEG_INFINITY; width * height],
        winner: vec![-1; width * height],
    };
    for row in 0..height {
        for col in 0..width {
            let p = (col as f64 + 0.5, row as f64 + 0.5);
            let idx = row * width + col;
            for (t, tri) in triangles.iter().enumerate() {
                let v0 = &vertices[tri[0] as usize];
                let v1 = &vertices[tri[1] as usize];
                let v2 = &vertices[tri[2] as usize];
                let Some(l) = oracle_barycentric(p, v0, v1, v2) else {
                    continue;
                };
                if l.iter().all(|&x| x >= 0.0) {
                    let z = l[0] * v0.z + l[1] * v1.z + l[2] * v2.z;
                    if z > out.depth[idx] {
                        out.depth[idx] = z;
                        out.winner[idx] = t as i32;
                        out.mask[idx] = 1;
                    }
                }
            }
        }
    }
    out
}

impl OracleRaster {
    /// A pixel is in the boundary band when any 8-neighbor disagrees on
    /// coverage or winner; everything else is interior, where the
    /// implementation must match exactly.
    pub fn is_boundary(&self, row: usize, col: usize) -> bool {
        let idx = row * self.width + col;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nr, nc) = (row as i64 + dr, col as i64 + dc);
                if nr < 0 || nc < 0 || nr >= self.height as i64 || nc >= self.width as i64 {
                    continue;
                }
                let n = nr as usize * self.width + nc as usize;
                if self.mask[n] != self.mask[idx] || self.winner[n] != self.winner[idx] {
                    return true;
                }
            }
        }
        false
    }
}

/// Sanity helper shared by flow tests: support of a flow field.
pub fn support(field: &[[f64; 3]]) -> Vec<usize> {
    (0..field.len())
        .filter(|&i| field[i].iter().any(|&c| c != 0.0))
        .collect()
}
