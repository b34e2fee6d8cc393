//! `loss`: evaluate the objective breakdown on image files and a flow
//! file. The adversarial component has no desk-scale discriminator, so it
//! is taken as a precomputed scalar (default 0). For inter-video mode the
//! reconstruction and temporal terms are forced to zero: no ground-truth
//! pairing exists there.

use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use faceflow::losses::{
    appearance_loss, reconstruction_loss, total_loss, AvgPoolPyramid, LossWeights,
};
use faceflow::sampling::Provenance;
use faceflow::temporal_flow::{temporal_loss, DenseFlowField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossMode {
    Intra,
    Inter,
}

#[derive(Serialize)]
struct LossReport {
    mode: String,
    adv: f64,
    app: f64,
    rec: f64,
    tmp: f64,
    total: f64,
    weights: LossWeights,
}

pub struct LossArgs<'a> {
    pub mode: LossMode,
    pub y_t: &'a Path,
    pub y_prev: &'a Path,
    pub x_i: &'a Path,
    pub x_p: &'a Path,
    pub flow: &'a Path,
    pub adv: f64,
    pub weights: LossWeights,
}

pub fn run(args: &LossArgs) -> Result<()> {
    let y_t = super::load_image(args.y_t)?;
    let y_prev = super::load_image(args.y_prev)?;
    let x_i = super::load_image(args.x_i)?;
    let x_p = super::load_image(args.x_p)?;

    let provenance = match args.mode {
        LossMode::Intra => Provenance::Intra,
        LossMode::Inter => Provenance::Inter,
    };

    let extractor = AvgPoolPyramid::new(3);
    let app = appearance_loss(&extractor, &y_t, &x_p).map_err(|e| anyhow::anyhow!("{e}"))?;
    let rec = reconstruction_loss(&y_t, &x_i, provenance).map_err(|e| anyhow::anyhow!("{e}"))?;

    let tmp = if provenance == Provenance::Inter {
        0.0
    } else {
        let (w, h, flow_xy) = faceflow::io::flo::load(args.flow)
            .with_context(|| format!("reading {}", args.flow.display()))?;
        if w != y_t.width() || h != y_t.height() {
            anyhow::bail!("flow is {w}x{h} but frames are {}x{}", y_t.width(), y_t.height());
        }
        let n = w * h;
        let flow: Vec<[f64; 3]> = flow_xy
            .iter()
            .map(|v| [v[0] as f64, v[1] as f64, 0.0])
            .collect();
        let field = DenseFlowField {
            width: w,
            height: h,
            flow: flow.clone(),
            vis_t: vec![1; n],
            vis_prev: vec![1; n],
            final_flow: flow,
        };
        temporal_loss(&y_t, &y_prev, &field).map_err(|e| anyhow::anyhow!("{e}"))?
    };

    let total = total_loss(args.adv, app, rec, tmp, &args.weights);
    let report = LossReport {
        mode: format!("{:?}", args.mode).to_lowercase(),
        adv: args.adv,
        app,
        rec,
        tmp,
        total,
        weights: args.weights,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
