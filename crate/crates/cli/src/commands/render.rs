//! `render`: rasterize every frame of a scene to color, mask, and depth
//! files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use faceflow::rasterizer::{facial_mask, Image};
use serde::Serialize;

use crate::config::load_scene;

#[derive(Serialize)]
struct RenderReport {
    frames: usize,
    output_dir: String,
    files: Vec<String>,
}

pub fn run(config_path: &Path) -> Result<()> {
    let scene = load_scene(config_path)?;
    fs::create_dir_all(&scene.output_dir)
        .with_context(|| format!("creating {}", scene.output_dir.display()))?;
    let ext = scene.config.format.extension();
    let mut files = Vec::new();
    for frame in 0..scene.frame_count() {
        let rendered = scene.render(frame)?;
        let raster = &rendered.raster;

        let color_path = scene.output_dir.join(format!("frame_{frame:04}_color.{ext}"));
        super::save_image(&raster.color_image(), &color_path)?;

        let mask = facial_mask(raster);
        let mask_pixels = mask
            .data()
            .iter()
            .map(|&m| [m as f64, m as f64, m as f64])
            .collect();
        let mask_image = Image::from_pixels(raster.width, raster.height, mask_pixels)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mask_path = scene.output_dir.join(format!("frame_{frame:04}_mask.{ext}"));
        super::save_image(&mask_image, &mask_path)?;

        let depth_path = scene.output_dir.join(format!("frame_{frame:04}_depth.raw"));
        faceflow::io::plane::save(&raster.depth, &depth_path)
            .with_context(|| format!("writing {}", depth_path.display()))?;

        for path in [&color_path, &mask_path, &depth_path] {
            eprintln!("wrote {}", path.display());
            files.push(file_name(path));
        }
    }
    let report = RenderReport {
        frames: scene.frame_count(),
        output_dir: scene.output_dir.display().to_string(),
        files,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn file_name(path: &PathBuf) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
