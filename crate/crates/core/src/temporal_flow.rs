//! Dense optical flow between two rendered frames of the same mesh.
//!
//! Per-vertex 3D displacements are interpolated across frame-t coverage
//! with the rasterizer's barycentric attribution, giving a per-pixel flow
//! `W` (pixels in x/y, camera units in z). Two visibility maps gate it:
//! `S^t` checks the attributed surface point against frame t's depth
//! buffer, `S^{t-1}` follows the flow back and checks against frame t-1's
//! buffer at the warped location. The final field is `W * S^t * S^{t-1}`.
//!
//! The same module hosts backward warping and the temporal consistency
//! loss comparing the previous frame against the warped current one.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::rasterizer::{Image, RasterOutput};

/// Relative depth tolerance for both visibility tests, scaled by the
/// scene's camera-space depth range.
pub const DEPTH_EPS_SCALE: f64 = 1e-5;

/// Flow plus visibility maps for one consecutive frame pair.
#[derive(Debug, Clone)]
pub struct DenseFlowField {
    pub width: usize,
    pub height: usize,
    /// Raw interpolated displacement per pixel, zero off-coverage.
    pub flow: Vec<[f64; 3]>,
    /// Frame-t visibility of the attributed surface point.
    pub vis_t: Vec<u8>,
    /// Frame-(t-1) visibility gathered at the warped location.
    pub vis_prev: Vec<u8>,
    /// `flow * vis_t * vis_prev`, the field used for warping.
    pub final_flow: Vec<[f64; 3]>,
}

impl DenseFlowField {
    /// Final flow x/y as f32 pairs, the layout flow files store.
    pub fn final_xy_f32(&self) -> Vec<[f32; 2]> {
        self.final_flow
            .iter()
            .map(|f| [f[0] as f32, f[1] as f32])
            .collect()
    }

    /// Number of pixels with a nonzero final flow vector.
    pub fn support_size(&self) -> usize {
        self.final_flow
            .iter()
            .filter(|f| f.iter().any(|&c| c != 0.0))
            .count()
    }
}

/// Rendered buffers and projected vertices for frames t and t-1.
///
/// `vertices_*` are in projected space: screen x, screen y, camera z.
/// Both frames share one triangle topology and one raster resolution.
#[derive(Debug, Clone)]
pub struct FramePairGeometry {
    pub raster_t: RasterOutput,
    pub raster_prev: RasterOutput,
    pub vertices_t: Vec<Vector3<f64>>,
    pub vertices_prev: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl FramePairGeometry {
    pub fn new(
        raster_t: RasterOutput,
        raster_prev: RasterOutput,
        vertices_t: Vec<Vector3<f64>>,
        vertices_prev: Vec<Vector3<f64>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self> {
        if raster_t.width != raster_prev.width || raster_t.height != raster_prev.height {
            return Err(Error::ShapeMismatch(format!(
                "raster resolutions differ: {}x{} vs {}x{}",
                raster_t.width, raster_t.height, raster_prev.width, raster_prev.height
            )));
        }
        if vertices_t.len() != vertices_prev.len() {
            return Err(Error::ShapeMismatch(format!(
                "vertex counts differ: {} vs {}",
                vertices_t.len(),
                vertices_prev.len()
            )));
        }
        if vertices_t.is_empty() {
            return Err(Error::ShapeMismatch("frame pair has no vertices".into()));
        }
        let v = vertices_t.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= v) {
                return Err(Error::ShapeMismatch(format!(
                    "triangle {t} references a vertex index >= {v}"
                )));
            }
        }
        for raster in [&raster_t, &raster_prev] {
            if raster
                .tri_index
                .iter()
                .any(|&t| t != crate::rasterizer::TRI_NONE && t as usize >= triangles.len())
            {
                return Err(Error::ShapeMismatch(
                    "raster attributes a triangle outside the topology".into(),
                ));
            }
        }
        Ok(Self {
            raster_t,
            raster_prev,
            vertices_t,
            vertices_prev,
            triangles,
        })
    }

    /// Depth tolerance for the visibility tests: a fixed fraction of the
    /// camera-space z range spanned by both frames.
    pub fn depth_epsilon(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in self.vertices_t.iter().chain(&self.vertices_prev) {
            lo = lo.min(v.z);
            hi = hi.max(v.z);
        }
        if hi > lo {
            DEPTH_EPS_SCALE * (hi - lo)
        } else {
            0.0
        }
    }
}

/// Per-vertex displacement `V^t - V^{t-1}` in projected space.
pub fn vertex_displacements(geom: &FramePairGeometry) -> Vec<Vector3<f64>> {
    geom.vertices_t
        .iter()
        .zip(&geom.vertices_prev)
        .map(|(t, p)| t - p)
        .collect()
}

/// Raw dense flow: barycentric interpolation of vertex displacements over
/// frame t's winning triangles; zero where frame t has no coverage.
pub fn interpolate_flow(geom: &FramePairGeometry) -> Vec<[f64; 3]> {
    let raster = &geom.raster_t;
    let mut flow = vec![[0.0; 3]; raster.width * raster.height];
    for idx in 0..flow.len() {
        if raster.mask[idx] == 0 {
            continue;
        }
        let tri = geom.triangles[raster.tri_index[idx] as usize];
        let lambda = raster.bary[idx];
        let mut w = [0.0; 3];
        for k in 0..3 {
            let vi = tri[k] as usize;
            let d = geom.vertices_t[vi] - geom.vertices_prev[vi];
            w[0] += lambda[k] * d.x;
            w[1] += lambda[k] * d.y;
            w[2] += lambda[k] * d.z;
        }
        flow[idx] = w;
    }
    flow
}

/// Frame-t visibility: the interpolated depth of the attributed triangle
/// must reach the depth buffer value at the pixel.
pub fn visibility_t(geom: &FramePairGeometry) -> Vec<u8> {
    let raster = &geom.raster_t;
    let eps = geom.depth_epsilon();
    let mut vis = vec![0u8; raster.width * raster.height];
    for idx in 0..vis.len() {
        if raster.mask[idx] == 0 {
            continue;
        }
        let tri = geom.triangles[raster.tri_index[idx] as usize];
        let lambda = raster.bary[idx];
        let qz: f64 = (0..3)
            .map(|k| lambda[k] * geom.vertices_t[tri[k] as usize].z)
            .sum();
        if qz >= raster.depth[idx] - eps {
            vis[idx] = 1;
        }
    }
    vis
}

/// Samples frame t-1's depth buffer at a continuous screen point.
///
/// Bilinear over the four surrounding pixel centers when all are covered,
/// nearest covered neighbor when 1-3 are, `None` when none are or the
/// point is outside the image.
fn sample_prev_depth(raster: &RasterOutput, x: f64, y: f64) -> Option<f64> {
    let (w, h) = (raster.width, raster.height);
    if !(0.0..=w as f64).contains(&x) || !(0.0..=h as f64).contains(&y) {
        return None;
    }
    let gx = x - 0.5;
    let gy = y - 0.5;
    let x0 = gx.floor();
    let y0 = gy.floor();
    let fx = gx - x0;
    let fy = gy - y0;
    let neighbors = [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1.0, y0, fx * (1.0 - fy)),
        (x0, y0 + 1.0, (1.0 - fx) * fy),
        (x0 + 1.0, y0 + 1.0, fx * fy),
    ];
    let mut usable: [Option<(usize, f64)>; 4] = [None; 4];
    let mut count = 0;
    for (slot, &(nx, ny, weight)) in usable.iter_mut().zip(&neighbors) {
        if nx < 0.0 || ny < 0.0 || nx >= w as f64 || ny >= h as f64 {
            continue;
        }
        let idx = ny as usize * w + nx as usize;
        if raster.mask[idx] == 1 {
            *slot = Some((idx, weight));
            count += 1;
        }
    }
    match count {
        0 => None,
        4 => Some(
            usable
                .iter()
                .flatten()
                .map(|&(idx, weight)| weight * raster.depth[idx])
                .sum(),
        ),
        _ => {
            // Nearest covered of the four, by distance to the sample point.
            let mut best: Option<(f64, usize)> = None;
            for (slot, &(nx, ny, _)) in usable.iter().zip(&neighbors) {
                if let Some((idx, _)) = slot {
                    let d2 = (nx - gx) * (nx - gx) + (ny - gy) * (ny - gy);
                    if best.map_or(true, |(bd, _)| d2 < bd) {
                        best = Some((d2, *idx));
                    }
                }
            }
            best.map(|(_, idx)| raster.depth[idx])
        }
    }
}

/// Frame-(t-1) visibility: follow the flow back from each covered frame-t
/// pixel and test the displaced depth against frame t-1's buffer there.
pub fn visibility_prev(geom: &FramePairGeometry, flow: &[[f64; 3]]) -> Vec<u8> {
    let raster = &geom.raster_t;
    let eps = geom.depth_epsilon();
    let mut vis = vec![0u8; raster.width * raster.height];
    for row in 0..raster.height {
        for col in 0..raster.width {
            let idx = row * raster.width + col;
            if raster.mask[idx] == 0 {
                continue;
            }
            let tri = geom.triangles[raster.tri_index[idx] as usize];
            let lambda = raster.bary[idx];
            let qz_t: f64 = (0..3)
                .map(|k| lambda[k] * geom.vertices_t[tri[k] as usize].z)
                .sum();
            let w = flow[idx];
            let px = (col as f64 + 0.5) - w[0];
            let py = (row as f64 + 0.5) - w[1];
            let qz_prev = qz_t - w[2];
            if let Some(depth) = sample_prev_depth(&geom.raster_prev, px, py) {
                if qz_prev >= depth - eps {
                    vis[idx] = 1;
                }
            }
        }
    }
    vis
}

/// Full dense flow: interpolation, both visibility maps, and the masked
/// final field `W * S^t * S^{t-1}`.
pub fn dense_flow(geom: &FramePairGeometry) -> DenseFlowField {
    let flow = interpolate_flow(geom);
    let vis_t = visibility_t(geom);
    let vis_prev = visibility_prev(geom, &flow);
    let final_flow = flow
        .iter()
        .zip(vis_t.iter().zip(&vis_prev))
        .map(|(w, (&st, &sp))| {
            let gate = (st * sp) as f64;
            [w[0] * gate, w[1] * gate, w[2] * gate]
        })
        .collect();
    DenseFlowField {
        width: geom.raster_t.width,
        height: geom.raster_t.height,
        flow,
        vis_t,
        vis_prev,
        final_flow,
    }
}

/// Sparse variant: each vertex splats its own displacement onto the single
/// pixel nearest its frame-t projection, kept only if that pixel is covered
/// and the vertex passes the frame-t z-buffer test. Front-most vertex wins
/// a contested pixel.
pub fn sparse_flow(geom: &FramePairGeometry) -> DenseFlowField {
    let raster = &geom.raster_t;
    let (w, h) = (raster.width, raster.height);
    let eps = geom.depth_epsilon();
    let mut flow = vec![[0.0; 3]; w * h];
    let mut vis = vec![0u8; w * h];
    let mut splat_z = vec![f64::NEG_INFINITY; w * h];
    for (vt, vp) in geom.vertices_t.iter().zip(&geom.vertices_prev) {
        let col = vt.x.floor();
        let row = vt.y.floor();
        if col < 0.0 || row < 0.0 || col >= w as f64 || row >= h as f64 {
            continue;
        }
        let idx = row as usize * w + col as usize;
        if raster.mask[idx] == 0 {
            continue;
        }
        if vt.z < raster.depth[idx] - eps {
            continue; // occluded at frame t
        }
        if vt.z > splat_z[idx] {
            splat_z[idx] = vt.z;
            let d = vt - vp;
            flow[idx] = [d.x, d.y, d.z];
            vis[idx] = 1;
        }
    }
    DenseFlowField {
        width: w,
        height: h,
        final_flow: flow.clone(),
        vis_t: vis.clone(),
        vis_prev: vis,
        flow,
    }
}

/// Bilinear fetch with clamp-to-edge replication. Exact pixel-center hits
/// return the stored value bit-for-bit.
fn sample_bilinear(image: &Image, x: f64, y: f64) -> [f64; 3] {
    let w = image.width();
    let h = image.height();
    let gx = (x - 0.5).clamp(0.0, (w - 1) as f64);
    let gy = (y - 0.5).clamp(0.0, (h - 1) as f64);
    let x0 = gx.floor();
    let y0 = gy.floor();
    let fx = gx - x0;
    let fy = gy - y0;
    let c0 = x0 as usize;
    let r0 = y0 as usize;
    if fx == 0.0 && fy == 0.0 {
        return image.pixel(r0, c0);
    }
    let c1 = (c0 + 1).min(w - 1);
    let r1 = (r0 + 1).min(h - 1);
    let p00 = image.pixel(r0, c0);
    let p01 = image.pixel(r0, c1);
    let p10 = image.pixel(r1, c0);
    let p11 = image.pixel(r1, c1);
    let mut out = [0.0; 3];
    for ch in 0..3 {
        out[ch] = (1.0 - fy) * ((1.0 - fx) * p00[ch] + fx * p01[ch])
            + fy * ((1.0 - fx) * p10[ch] + fx * p11[ch]);
    }
    out
}

/// Backward warp using the final flow's x/y components: output pixel (i,j)
/// samples the input at its own center displaced by the flow, so
/// `warp(Y^t, F)` lines up with frame t-1.
pub fn warp(image: &Image, flow: &DenseFlowField) -> Result<Image> {
    if image.width() != flow.width || image.height() != flow.height {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs flow {}x{}",
            image.width(),
            image.height(),
            flow.width,
            flow.height
        )));
    }
    warp_components(image, &flow.final_flow)
}

/// Backward warp from bare per-pixel (x, y, _) displacement rows.
pub fn warp_components(image: &Image, flow: &[[f64; 3]]) -> Result<Image> {
    let (w, h) = (image.width(), image.height());
    if flow.len() != w * h {
        return Err(Error::ShapeMismatch(format!(
            "flow buffer has {} entries for a {}x{} image",
            flow.len(),
            w,
            h
        )));
    }
    let mut out = Image::new(w, h);
    for row in 0..h {
        for col in 0..w {
            let f = flow[row * w + col];
            let x = (col as f64 + 0.5) + f[0];
            let y = (row as f64 + 0.5) + f[1];
            out.set_pixel(row, col, sample_bilinear(image, x, y));
        }
    }
    Ok(out)
}

/// Mean squared error between `y_prev` and the warped `y_t`, over every
/// pixel and channel.
pub fn temporal_loss(y_t: &Image, y_prev: &Image, flow: &DenseFlowField) -> Result<f64> {
    if !y_t.same_shape(y_prev) {
        return Err(Error::ShapeMismatch("frame shapes differ".into()));
    }
    if y_t.width() == 0 || y_t.height() == 0 {
        return Err(Error::ShapeMismatch("empty frames".into()));
    }
    let warped = warp(y_t, flow)?;
    Ok(mse_region(y_prev, &warped, 0))
}

/// Temporal loss restricted to pixels at least `margin` away from every
/// image border, for fixtures where warping has no valid data at the edge.
pub fn temporal_loss_interior(
    y_t: &Image,
    y_prev: &Image,
    flow: &DenseFlowField,
    margin: usize,
) -> Result<f64> {
    if !y_t.same_shape(y_prev) {
        return Err(Error::ShapeMismatch("frame shapes differ".into()));
    }
    if 2 * margin >= y_t.width() || 2 * margin >= y_t.height() {
        return Err(Error::ShapeMismatch(format!(
            "margin {margin} leaves no interior in a {}x{} image",
            y_t.width(),
            y_t.height()
        )));
    }
    let warped = warp(y_t, flow)?;
    Ok(mse_region(y_prev, &warped, margin))
}

fn mse_region(a: &Image, b: &Image, margin: usize) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut sum = 0.0;
    let mut n = 0usize;
    for row in margin..h - margin {
        for col in margin..w - margin {
            let pa = a.pixel(row, col);
            let pb = b.pixel(row, col);
            for ch in 0..3 {
                let d = pa[ch] - pb[ch];
                sum += d * d;
            }
            n += 3;
        }
    }
    sum / n as f64
}
