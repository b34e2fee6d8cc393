//! Linear blendshape face model.
//!
//! A face is the mean shape plus linear combinations of identity and
//! expression basis columns. Identity and expression coefficients can be
//! recombined across sources, and the resulting mesh is projected to the
//! image plane with a weak-perspective camera (orthographic projection,
//! uniform scale, 2D translation).
//!
//! Screen convention: x grows rightward, y grows downward, origin at the
//! top-left pixel center. Depth convention: larger camera-space z is closer
//! to the camera.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// One basis of per-vertex displacement columns (identity or expression).
///
/// Column `k` holds a full V-vertex displacement field; the reconstructed
/// shape adds `coeff[k] * column[k]` for every column.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: Vec<Vec<Vector3<f64>>>,
}

impl Basis {
    pub fn new(columns: Vec<Vec<Vector3<f64>>>) -> Self {
        Self { columns }
    }

    /// Number of columns (the basis rank).
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[Vector3<f64>] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<Vector3<f64>>] {
        &self.columns
    }
}

/// Mean shape, identity/expression bases, and triangle topology.
#[derive(Debug, Clone)]
pub struct BlendshapeModel {
    mean_shape: Vec<Vector3<f64>>,
    id_basis: Basis,
    exp_basis: Basis,
    triangles: Arc<Vec<[u32; 3]>>,
}

impl BlendshapeModel {
    /// Validates and assembles a model.
    ///
    /// Requires V >= 3 vertices, T >= 1 triangles, both basis ranks >= 1,
    /// every basis column of length V, all triangle indices < V, and no
    /// triangle repeating a vertex index.
    pub fn new(
        mean_shape: Vec<Vector3<f64>>,
        id_basis: Basis,
        exp_basis: Basis,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self> {
        let v = mean_shape.len();
        if v < 3 {
            return Err(Error::InvalidModel(format!("need at least 3 vertices, got {v}")));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidModel("need at least 1 triangle".into()));
        }
        if id_basis.rank() == 0 || exp_basis.rank() == 0 {
            return Err(Error::InvalidModel("basis ranks must be at least 1".into()));
        }
        for (name, basis) in [("identity", &id_basis), ("expression", &exp_basis)] {
            for (k, col) in basis.columns().iter().enumerate() {
                if col.len() != v {
                    return Err(Error::InvalidModel(format!(
                        "{name} basis column {k} has {} vertices, expected {v}",
                        col.len()
                    )));
                }
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= v) {
                return Err(Error::InvalidModel(format!(
                    "triangle {t} references a vertex index >= {v}"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidModel(format!(
                    "triangle {t} repeats a vertex index"
                )));
            }
        }
        Ok(Self {
            mean_shape,
            id_basis,
            exp_basis,
            triangles: Arc::new(triangles),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.mean_shape.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn mean_shape(&self) -> &[Vector3<f64>] {
        &self.mean_shape
    }

    pub fn id_basis(&self) -> &Basis {
        &self.id_basis
    }

    pub fn exp_basis(&self) -> &Basis {
        &self.exp_basis
    }

    pub fn triangles(&self) -> &Arc<Vec<[u32; 3]>> {
        &self.triangles
    }
}

/// Identity and expression coefficients for one face.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Coefficients {
    pub alpha_id: Vec<f64>,
    pub alpha_exp: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(model: &BlendshapeModel) -> Self {
        Self {
            alpha_id: vec![0.0; model.id_basis.rank()],
            alpha_exp: vec![0.0; model.exp_basis.rank()],
        }
    }

    fn check_ranks(&self, model: &BlendshapeModel) -> Result<()> {
        if self.alpha_id.len() != model.id_basis.rank() {
            return Err(Error::RankMismatch {
                which: "identity",
                expected: model.id_basis.rank(),
                actual: self.alpha_id.len(),
            });
        }
        if self.alpha_exp.len() != model.exp_basis.rank() {
            return Err(Error::RankMismatch {
                which: "expression",
                expected: model.exp_basis.rank(),
                actual: self.alpha_exp.len(),
            });
        }
        Ok(())
    }
}

/// Weak-perspective camera: rotation, 2D image-plane translation (pixels),
/// and a positive uniform scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector2<f64>,
    scale: f64,
}

impl CameraPose {
    const ORTHONORMAL_TOL: f64 = 1e-6;

    pub fn new(rotation: Matrix3<f64>, translation: Vector2<f64>, scale: f64) -> Result<Self> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::InvalidCamera(format!("scale must be positive, got {scale}")));
        }
        let gram = rotation.transpose() * rotation;
        let deviation = (gram - Matrix3::identity()).abs().max();
        if !deviation.is_finite() || deviation > Self::ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "rotation is not orthonormal (max |R^T R - I| = {deviation:.3e})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
            scale,
        })
    }

    /// The identity camera: no rotation, no offset, unit scale.
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector2::zeros(),
            scale: 1.0,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector2<f64> {
        self.translation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same camera with the image-plane translation shifted by `(dx, dy)`.
    pub fn translated_by(&self, dx: f64, dy: f64) -> Self {
        Self {
            rotation: self.rotation,
            translation: self.translation + Vector2::new(dx, dy),
            scale: self.scale,
        }
    }
}

/// A reconstructed 3D face sharing its model's triangle topology.
#[derive(Debug, Clone)]
pub struct Mesh3D {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Arc<Vec<[u32; 3]>>,
}

impl Mesh3D {
    /// Builds a mesh directly from vertices and topology (for fixtures and
    /// geometry that does not come from a blendshape model).
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let v = vertices.len();
        if vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidModel("mesh vertices must be finite".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= v) {
                return Err(Error::InvalidModel(format!(
                    "triangle {t} references a vertex index >= {v}"
                )));
            }
        }
        Ok(Self {
            vertices,
            triangles: Arc::new(triangles),
        })
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: Arc::clone(&self.triangles),
        }
    }
}

/// Per-vertex RGB colors in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TextureMap {
    colors: Vec<[f64; 3]>,
}

impl TextureMap {
    pub fn new(colors: Vec<[f64; 3]>) -> Result<Self> {
        for (v, c) in colors.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
                return Err(Error::InvalidTexture(format!(
                    "vertex {v} color {c:?} outside [0, 1]"
                )));
            }
        }
        Ok(Self { colors })
    }

    /// Constant color for every vertex.
    pub fn constant(vertex_count: usize, color: [f64; 3]) -> Result<Self> {
        Self::new(vec![color; vertex_count])
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, vertex: usize) -> [f64; 3] {
        self.colors[vertex]
    }

    pub fn colors(&self) -> &[[f64; 3]] {
        &self.colors
    }
}

/// Reconstructs the face mesh `mean + A_id * alpha_id + A_exp * alpha_exp`.
pub fn reconstruct_shape(model: &BlendshapeModel, coeffs: &Coefficients) -> Result<Mesh3D> {
    coeffs.check_ranks(model)?;
    let mut vertices = model.mean_shape.clone();
    for (k, col) in model.id_basis.columns().iter().enumerate() {
        let a = coeffs.alpha_id[k];
        for (vert, delta) in vertices.iter_mut().zip(col) {
            *vert += a * delta;
        }
    }
    for (k, col) in model.exp_basis.columns().iter().enumerate() {
        let a = coeffs.alpha_exp[k];
        for (vert, delta) in vertices.iter_mut().zip(col) {
            *vert += a * delta;
        }
    }
    Ok(Mesh3D {
        vertices,
        triangles: Arc::clone(&model.triangles),
    })
}

/// Reconstructs with identity taken from `id_coeffs` and expression from
/// `exp_coeffs`, mixing two sources into one face.
pub fn recombine(
    model: &BlendshapeModel,
    id_coeffs: &Coefficients,
    exp_coeffs: &Coefficients,
) -> Result<Mesh3D> {
    id_coeffs.check_ranks(model)?;
    exp_coeffs.check_ranks(model)?;
    let mixed = Coefficients {
        alpha_id: id_coeffs.alpha_id.clone(),
        alpha_exp: exp_coeffs.alpha_exp.clone(),
    };
    reconstruct_shape(model, &mixed)
}

/// Projects each vertex to `(screen x, screen y, camera z)`.
///
/// The rotated vertex `r = R * v` maps to `(s*r.x + t.x, s*r.y + t.y, r.z)`;
/// z stays unscaled so depth ordering is preserved for any camera.
pub fn project(mesh: &Mesh3D, camera: &CameraPose) -> Vec<Vector3<f64>> {
    let s = camera.scale;
    let t = camera.translation;
    mesh.vertices
        .iter()
        .map(|v| {
            let r = camera.rotation * v;
            Vector3::new(s * r.x + t.x, s * r.y + t.y, r.z)
        })
        .collect()
}
