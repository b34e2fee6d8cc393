//! Scene configuration: a JSON file naming a model, per-frame
//! coefficients and cameras, the raster resolution, and an output
//! directory. Paths are resolved relative to the config file so scene
//! folders are relocatable.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{RngExt, SeedableRng};
use serde::Deserialize;

use faceflow::morphable_model::{project, CameraPose, Coefficients, Mesh3D, TextureMap};
use faceflow::rasterizer::{rasterize_projected, RasterOutput};
use faceflow::{reconstruct_shape, BlendshapeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Ppm,
    Png,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Ppm => "ppm",
            Self::Png => "png",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CameraConfig {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 2],
    pub scale: f64,
}

impl CameraConfig {
    pub fn to_pose(&self) -> Result<CameraPose> {
        let r = self.rotation;
        let rotation = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        CameraPose::new(
            rotation,
            Vector2::new(self.translation[0], self.translation[1]),
            self.scale,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct FrameConfig {
    pub coefficients: Coefficients,
    pub camera: CameraConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SceneConfig {
    pub model: PathBuf,
    pub width: usize,
    pub height: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    /// Optional per-vertex RGB colors; absent means a seeded random texture.
    #[serde(default)]
    pub texture: Option<Vec<[f64; 3]>>,
    pub frames: Vec<FrameConfig>,
}

/// A loaded scene ready to render.
pub struct Scene {
    pub config: SceneConfig,
    pub model: BlendshapeModel,
    pub texture: TextureMap,
    pub output_dir: PathBuf,
}

/// One rendered frame plus the projected vertices it came from.
pub struct RenderedFrame {
    pub projected: Vec<Vector3<f64>>,
    pub raster: RasterOutput,
}

pub fn load_scene(config_path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let config: SceneConfig =
        serde_json::from_str(&text).with_context(|| "parsing scene config JSON")?;
    if config.frames.is_empty() {
        bail!("scene config lists no frames");
    }
    if config.width == 0 || config.height == 0 {
        bail!("scene resolution must be at least 1x1");
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    let model_path = base.join(&config.model);
    let model = faceflow::io::model::load(&model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let texture = match &config.texture {
        Some(colors) => TextureMap::new(colors.clone()).map_err(|e| anyhow::anyhow!("{e}"))?,
        None => seeded_texture(model.vertex_count(), config.seed),
    };
    if texture.len() != model.vertex_count() {
        bail!(
            "texture has {} colors for {} vertices",
            texture.len(),
            model.vertex_count()
        );
    }
    let output_dir = base.join(&config.output_dir);
    Ok(Scene {
        config,
        model,
        texture,
        output_dir,
    })
}

fn seeded_texture(vertex_count: usize, seed: u64) -> TextureMap {
    let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
    let colors = (0..vertex_count)
        .map(|_| {
            [
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ]
        })
        .collect();
    TextureMap::new(colors).expect("random colors are in range")
}

impl Scene {
    pub fn frame_count(&self) -> usize {
        self.config.frames.len()
    }

    pub fn mesh(&self, frame: usize) -> Result<Mesh3D> {
        let frame_cfg = &self.config.frames[frame];
        reconstruct_shape(&self.model, &frame_cfg.coefficients)
            .map_err(|e| anyhow::anyhow!("frame {frame}: {e}"))
    }

    pub fn render(&self, frame: usize) -> Result<RenderedFrame> {
        let mesh = self.mesh(frame)?;
        let camera = self.config.frames[frame].camera.to_pose()?;
        let projected = project(&mesh, &camera);
        let raster = rasterize_projected(
            &projected,
            &mesh.triangles,
            &self.texture,
            self.config.width,
            self.config.height,
        )
        .map_err(|e| anyhow::anyhow!("frame {frame}: {e}"))?;
        Ok(RenderedFrame { projected, raster })
    }
}
