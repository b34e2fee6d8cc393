//! `flow`: dense or sparse flow between frame `t` and its predecessor,
//! written as a `.flo` file plus raw z and visibility planes.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use faceflow::temporal_flow::{dense_flow, sparse_flow, FramePairGeometry};

use crate::config::load_scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum FlowMode {
    #[default]
    Dense,
    Sparse,
}

#[derive(Serialize)]
struct FlowReport {
    frame: usize,
    mode: String,
    support: usize,
    files: Vec<String>,
}

pub fn run(config_path: &Path, frame: usize, mode: FlowMode) -> Result<()> {
    let scene = load_scene(config_path)?;
    if frame >= scene.frame_count() {
        anyhow::bail!(
            "frame {frame} out of range, scene has {} frames",
            scene.frame_count()
        );
    }
    let current = scene.render(frame)?;
    let previous = scene.render(frame - 1)?;
    let geom = FramePairGeometry::new(
        current.raster,
        previous.raster,
        current.projected,
        previous.projected,
        scene.model.triangles().as_slice().to_vec(),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    let field = match mode {
        FlowMode::Dense => dense_flow(&geom),
        FlowMode::Sparse => sparse_flow(&geom),
    };

    fs::create_dir_all(&scene.output_dir)
        .with_context(|| format!("creating {}", scene.output_dir.display()))?;
    let stem = format!("flow_{frame:04}");
    let flo_path = scene.output_dir.join(format!("{stem}.flo"));
    faceflow::io::flo::save(field.width, field.height, &field.final_xy_f32(), &flo_path)
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let z: Vec<f64> = field.final_flow.iter().map(|f| f[2]).collect();
    let z_path = scene.output_dir.join(format!("{stem}_z.raw"));
    faceflow::io::plane::save(&z, &z_path).map_err(|e| anyhow::anyhow!("{e}"))?;

    let vis_t: Vec<f64> = field.vis_t.iter().map(|&v| v as f64).collect();
    let vis_t_path = scene.output_dir.join(format!("{stem}_vis_t.raw"));
    faceflow::io::plane::save(&vis_t, &vis_t_path).map_err(|e| anyhow::anyhow!("{e}"))?;

    let vis_prev: Vec<f64> = field.vis_prev.iter().map(|&v| v as f64).collect();
    let vis_prev_path = scene.output_dir.join(format!("{stem}_vis_prev.raw"));
    faceflow::io::plane::save(&vis_prev, &vis_prev_path).map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut files = Vec::new();
    for path in [&flo_path, &z_path, &vis_t_path, &vis_prev_path] {
        eprintln!("wrote {}", path.display());
        files.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    let report = FlowReport {
        frame,
        mode: format!("{mode:?}").to_lowercase(),
        support: field.support_size(),
        files,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
