//! Z-buffer triangle rasterization.
//!
//! Renders a projected mesh into a color image plus per-pixel depth,
//! triangle-index, and barycentric attribution buffers, and the binary
//! facial coverage mask. A pixel is covered when its center lies inside
//! the projected triangle; ties on edges are broken by a top-left fill
//! rule so triangles sharing an edge never double-fill or leave gaps.
//! The triangle with the largest interpolated z wins the depth test
//! (larger z is closer to the camera).

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::morphable_model::{project, CameraPose, Mesh3D, TextureMap};

/// Depth value for pixels no triangle covers.
pub const DEPTH_EMPTY: f64 = f64::NEG_INFINITY;

/// Triangle index for pixels no triangle covers.
pub const TRI_NONE: i32 = -1;

/// An RGB image with components in [0, 1], row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    /// All-black image.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
        }
    }

    /// Validates finiteness and range, clamps rounding jitter into [0, 1].
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "image buffer has {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        const SLACK: f64 = 1e-9;
        let mut pixels = pixels;
        for px in &mut pixels {
            for c in px.iter_mut() {
                if !c.is_finite() || *c < -SLACK || *c > 1.0 + SLACK {
                    return Err(Error::ShapeMismatch(format!(
                        "pixel component {c} outside [0, 1]"
                    )));
                }
                *c = c.clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, value: [f64; 3]) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// A per-pixel 0/1 map, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "mask buffer has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::ShapeMismatch("mask values must be 0 or 1".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum()
    }
}

/// Everything one rasterization pass produces.
///
/// Field invariants: `mask == 1` exactly where `tri_index >= 0` exactly
/// where `depth > -inf`; barycentrics at covered pixels are nonnegative
/// and sum to 1.
#[derive(Debug, Clone)]
pub struct RasterOutput {
    pub width: usize,
    pub height: usize,
    /// Interpolated per-vertex texture, black where uncovered.
    pub color: Vec<[f64; 3]>,
    /// Winning interpolated z per pixel, `DEPTH_EMPTY` where uncovered.
    pub depth: Vec<f64>,
    /// Winning triangle index per pixel, `TRI_NONE` where uncovered.
    pub tri_index: Vec<i32>,
    /// Barycentric weights of the winner in stored vertex order.
    pub bary: Vec<[f64; 3]>,
    /// 1 where any triangle covers the pixel center.
    pub mask: Vec<u8>,
}

impl RasterOutput {
    fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            color: vec![[0.0; 3]; n],
            depth: vec![DEPTH_EMPTY; n],
            tri_index: vec![TRI_NONE; n],
            bary: vec![[0.0; 3]; n],
            mask: vec![0; n],
        }
    }

    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn color_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.color.clone(),
        }
    }

    /// Barycentric buffer flattened to H*W*3 values, the layout raw f64
    /// plane dumps use.
    pub fn bary_flat(&self) -> Vec<f64> {
        self.bary.iter().flatten().copied().collect()
    }
}

/// `(b - a) x (p - a)`, twice the signed area of triangle (a, b, p).
///
/// With y growing downward, a positive value puts `p` on the interior side
/// of a positively wound triangle's directed edge `a -> b`.
#[inline]
fn orient2d(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Tie rule for pixel centers exactly on a directed edge `a -> b` of a
/// positively wound triangle: the edge owns the pixel iff it is a top edge
/// (horizontal, pointing +x) or a left edge (pointing -y).
#[inline]
fn edge_is_top_left(ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let dx = bx - ax;
    let dy = by - ay;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Rasterizes already-projected vertices `(screen x, screen y, camera z)`.
///
/// Degenerate triangles (zero signed area in projection) are skipped.
pub fn rasterize_projected(
    projected: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    texture: &TextureMap,
    width: usize,
    height: usize,
) -> Result<RasterOutput> {
    if width == 0 || height == 0 {
        return Err(Error::ShapeMismatch(
            "raster target must be at least 1x1".into(),
        ));
    }
    if texture.len() != projected.len() {
        return Err(Error::ShapeMismatch(format!(
            "texture has {} colors for {} vertices",
            texture.len(),
            projected.len()
        )));
    }
    let mut out = RasterOutput::empty(width, height);

    for (t, tri) in triangles.iter().enumerate() {
        let [i0, i1, i2] = [tri[0] as usize, tri[1] as usize, tri[2] as usize];
        let p0 = projected[i0];
        let p1 = projected[i1];
        let p2 = projected[i2];

        let area = orient2d(p0.x, p0.y, p1.x, p1.y, p2.x, p2.y);
        if area == 0.0 {
            continue;
        }
        // Canonicalize to positive winding without reordering vertices:
        // negate the edge functions instead.
        let sign = if area > 0.0 { 1.0 } else { -1.0 };
        let abs_area = area * sign;

        // Directed edges of the positively wound triangle, opposite each
        // vertex: weight k comes from the edge joining the other two.
        let edges = if sign > 0.0 {
            [(p1, p2), (p2, p0), (p0, p1)]
        } else {
            [(p2, p1), (p0, p2), (p1, p0)]
        };
        let tie_ok = [
            edge_is_top_left(edges[0].0.x, edges[0].0.y, edges[0].1.x, edges[0].1.y),
            edge_is_top_left(edges[1].0.x, edges[1].0.y, edges[1].1.x, edges[1].1.y),
            edge_is_top_left(edges[2].0.x, edges[2].0.y, edges[2].1.x, edges[2].1.y),
        ];

        let min_x = p0.x.min(p1.x).min(p2.x);
        let max_x = p0.x.max(p1.x).max(p2.x);
        let min_y = p0.y.min(p1.y).min(p2.y);
        let max_y = p0.y.max(p1.y).max(p2.y);
        if max_x < 0.0 || max_y < 0.0 || min_x > width as f64 || min_y > height as f64 {
            continue;
        }
        let col_lo = ((min_x - 0.5).floor().max(0.0)) as usize;
        let col_hi = ((max_x - 0.5).ceil().min((width - 1) as f64)) as usize;
        let row_lo = ((min_y - 0.5).floor().max(0.0)) as usize;
        let row_hi = ((max_y - 0.5).ceil().min((height - 1) as f64)) as usize;

        let c0 = texture.color(i0);
        let c1 = texture.color(i1);
        let c2 = texture.color(i2);

        for row in row_lo..=row_hi {
            let cy = row as f64 + 0.5;
            for col in col_lo..=col_hi {
                let cx = col as f64 + 0.5;
                let w = [
                    sign * orient2d(p1.x, p1.y, p2.x, p2.y, cx, cy),
                    sign * orient2d(p2.x, p2.y, p0.x, p0.y, cx, cy),
                    sign * orient2d(p0.x, p0.y, p1.x, p1.y, cx, cy),
                ];
                let covered = (0..3).all(|k| w[k] > 0.0 || (w[k] == 0.0 && tie_ok[k]));
                if !covered {
                    continue;
                }
                // Exact partition of unity: the third weight closes the sum.
                let l0 = w[0] / abs_area;
                let l1 = w[1] / abs_area;
                let lambda = [l0, l1, 1.0 - l0 - l1];
                let z = lambda[0] * p0.z + lambda[1] * p1.z + lambda[2] * p2.z;
                let idx = row * width + col;
                if z > out.depth[idx] {
                    out.depth[idx] = z;
                    out.tri_index[idx] = t as i32;
                    out.bary[idx] = lambda;
                    out.mask[idx] = 1;
                    for ch in 0..3 {
                        let v = lambda[0] * c0[ch] + lambda[1] * c1[ch] + lambda[2] * c2[ch];
                        out.color[idx][ch] = v.clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Projects the mesh with the camera and rasterizes it.
pub fn rasterize(
    mesh: &Mesh3D,
    camera: &CameraPose,
    texture: &TextureMap,
    width: usize,
    height: usize,
) -> Result<RasterOutput> {
    let projected = project(mesh, camera);
    rasterize_projected(&projected, &mesh.triangles, texture, width, height)
}

/// Extracts the binary facial coverage mask from a render.
pub fn facial_mask(raster: &RasterOutput) -> BinaryMask {
    BinaryMask {
        width: raster.width,
        height: raster.height,
        data: raster.mask.clone(),
    }
}

/// Appearance hint: the source image with masked pixels zeroed,
/// `out = source * (1 - mask)`.
pub fn appearance_hint(source: &Image, mask: &BinaryMask) -> Result<Image> {
    if source.width != mask.width || source.height != mask.height {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs mask {}x{}",
            source.width, source.height, mask.width, mask.height
        )));
    }
    let pixels = source
        .pixels
        .iter()
        .zip(&mask.data)
        .map(|(px, &m)| {
            let keep = 1.0 - m as f64;
            [px[0] * keep, px[1] * keep, px[2] * keep]
        })
        .collect();
    Ok(Image {
        width: source.width,
        height: source.height,
        pixels,
    })
}
