//! `warp`: backward-warp an image by a `.flo` flow field.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use faceflow::temporal_flow::warp_components;

#[derive(Serialize)]
struct WarpReport {
    output: String,
    width: usize,
    height: usize,
}

pub fn run(image_path: &Path, flow_path: &Path, output_path: &Path) -> Result<()> {
    let image = super::load_image(image_path)?;
    let (w, h, flow_xy) = faceflow::io::flo::load(flow_path)
        .with_context(|| format!("reading {}", flow_path.display()))?;
    if w != image.width() || h != image.height() {
        anyhow::bail!(
            "flow is {w}x{h} but image is {}x{}",
            image.width(),
            image.height()
        );
    }
    let flow: Vec<[f64; 3]> = flow_xy
        .iter()
        .map(|v| [v[0] as f64, v[1] as f64, 0.0])
        .collect();
    let out = warp_components(&image, &flow).map_err(|e| anyhow::anyhow!("{e}"))?;
    super::save_image(&out, output_path)?;
    eprintln!("wrote {}", output_path.display());
    let report = WarpReport {
        output: output_path.display().to_string(),
        width: w,
        height: h,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
