//! Command-line front end for the faceflow kernels.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error. Logs go to
//! stderr; every command prints its machine-readable result as one JSON
//! line on stdout. All commands are deterministic given their arguments.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::flow::FlowMode;
use commands::loss::{LossArgs, LossMode};
use commands::rcn_check::CheckArgs;
use faceflow::losses::LossWeights;

/// Argument combinations that are wrong regardless of any file content.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "faceflow",
    version,
    about = "Render blendshape scenes, extract mesh-derived optical flow, warp frames, and evaluate losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render every frame of a scene to color, mask, and depth files.
    Render {
        /// Scene config JSON.
        #[arg(long)]
        config: PathBuf,
    },
    /// Extract flow between frame T and frame T-1 of a scene.
    Flow {
        /// Scene config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Frame index t (needs a predecessor, so t >= 1).
        #[arg(long)]
        frame: usize,
        /// Dense barycentric flow or the sparse per-vertex ablation.
        #[arg(long, value_enum, default_value_t)]
        mode: FlowMode,
    },
    /// Backward-warp an image by a .flo flow field.
    Warp {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate the loss breakdown on image files and a flow file. The
    /// appearance term embeds both frames with the built-in 3-level
    /// average-pooling pyramid.
    Loss {
        /// Whether the triplet came from one video or three.
        #[arg(long, value_enum)]
        mode: LossMode,
        /// Generated frame at time t.
        #[arg(long = "y-t")]
        y_t: PathBuf,
        /// Generated frame at time t-1.
        #[arg(long = "y-prev")]
        y_prev: PathBuf,
        /// Identity source frame.
        #[arg(long = "x-i")]
        x_i: PathBuf,
        /// Appearance source frame.
        #[arg(long = "x-p")]
        x_p: PathBuf,
        /// Flow file warping t back to t-1 (read only in intra mode).
        #[arg(long)]
        flow: PathBuf,
        /// Precomputed adversarial component.
        #[arg(long, default_value_t = 0.0)]
        adv: f64,
        /// Term weights as "adv,app,rec,tmp".
        #[arg(long, value_parser = parse_weights)]
        weights: Option<LossWeights>,
    },
    /// Check the normalization layer's analytic gradients against finite
    /// differences.
    RcnCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[arg(long, default_value_t = 4)]
        height: usize,
        #[arg(long, default_value_t = 4)]
        width: usize,
        /// Pin every channel's raw alpha to this value.
        #[arg(long)]
        alpha: Option<f64>,
        /// Pin every channel's raw beta to this value.
        #[arg(long)]
        beta: Option<f64>,
        /// Central-difference step size.
        #[arg(long, default_value_t = commands::rcn_check::DEFAULT_FD_STEP)]
        step: f64,
        /// Negative control: corrupt the analytic alpha gradient sign.
        #[arg(long, default_value_t = false)]
        inject_sign_bug: bool,
    },
    /// Draw seeded training triplets and print mode/video statistics.
    SampleStats {
        /// Dataset manifest JSON.
        #[arg(long)]
        manifest: PathBuf,
        /// Intra-video sampling ratio in [0, 1].
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        count: usize,
    },
}

fn parse_weights(s: &str) -> Result<LossWeights, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated weights: adv,app,rec,tmp".into());
    }
    let mut values = [0.0f64; 4];
    for (v, p) in values.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| format!("bad weight {p:?}"))?;
    }
    LossWeights::new(values[0], values[1], values[2], values[3]).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Render { config } => commands::render::run(&config),
        Command::Flow {
            config,
            frame,
            mode,
        } => {
            if frame == 0 {
                return Err(UsageError("flow needs --frame >= 1 (a predecessor must exist)".into()).into());
            }
            commands::flow::run(&config, frame, mode)
        }
        Command::Warp {
            image,
            flow,
            output,
        } => commands::warp::run(&image, &flow, &output),
        Command::Loss {
            mode,
            y_t,
            y_prev,
            x_i,
            x_p,
            flow,
            adv,
            weights,
        } => commands::loss::run(&LossArgs {
            mode,
            y_t: &y_t,
            y_prev: &y_prev,
            x_i: &x_i,
            x_p: &x_p,
            flow: &flow,
            adv,
            weights: weights.unwrap_or_default(),
        }),
        Command::RcnCheck {
            seed,
            channels,
            height,
            width,
            alpha,
            beta,
            step,
            inject_sign_bug,
        } => {
            let pass = commands::rcn_check::run(&CheckArgs {
                seed,
                channels,
                height,
                width,
                alpha,
                beta,
                step,
                inject_sign_bug,
            })?;
            if !pass {
                anyhow::bail!("gradient check failed");
            }
            Ok(())
        }
        Command::SampleStats {
            manifest,
            sigma,
            seed,
            count,
        } => {
            if !(0.0..=1.0).contains(&sigma) {
                return Err(UsageError(format!("--sigma must be in [0, 1], got {sigma}")).into());
            }
            if count == 0 {
                return Err(UsageError("--count must be at least 1".into()).into());
            }
            commands::sample_stats::run(&manifest, sigma, seed, count)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap exits 0 for --help/--version and 2 for usage errors.
            err.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
