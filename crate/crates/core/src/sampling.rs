//! Dynamic training sample selection.
//!
//! Each draw yields three pairs of consecutive frames (appearance,
//! identity, expression). With probability `sigma` all three pairs come
//! from one uniformly chosen video (intra-video); otherwise from three
//! distinct uniformly chosen videos (inter-video). Frame indices are
//! 1-based; the time-t index is uniform on `[2, L]` so the t-1 frame
//! always exists.
//!
//! Randomness comes from a caller-provided generator; [`sampler_rng`]
//! builds the documented default, a 64-bit PCG stream, so identical
//! (manifest, sigma, seed) inputs reproduce identical sample streams.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The reproducible generator used by the CLI and tests.
pub type SamplerRng = rand_pcg::Pcg64;

/// Seeds the default PCG-family generator.
pub fn sampler_rng(seed: u64) -> SamplerRng {
    use rand::SeedableRng;
    SamplerRng::seed_from_u64(seed)
}

/// One video in the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub id: String,
    /// Frame count; must be at least 2 so a consecutive pair exists.
    pub frames: u32,
    /// Path template for frame files, e.g. `vids/a/%04d.png`.
    #[serde(default)]
    pub template: String,
}

/// The dataset: a list of videos with frame counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub videos: Vec<VideoEntry>,
}

impl DatasetManifest {
    pub fn new(videos: Vec<VideoEntry>) -> Result<Self> {
        let manifest = Self { videos };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.videos.is_empty() {
            return Err(Error::InvalidManifest("manifest lists no videos".into()));
        }
        for (n, video) in self.videos.iter().enumerate() {
            if video.frames < 2 {
                return Err(Error::InvalidManifest(format!(
                    "video {n} ({}) has {} frames, need at least 2",
                    video.id, video.frames
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let manifest: Self =
            serde_json::from_str(json).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }
}

/// How a triplet's videos were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Intra,
    Inter,
}

/// One frame: video index plus 1-based frame index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    pub video: usize,
    pub frame: u32,
}

/// A consecutive pair `(frame - 1, frame)` within one video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePair {
    pub video: usize,
    /// Time-t frame index, in `[2, L]`.
    pub frame_t: u32,
}

impl FramePair {
    pub fn at_t(&self) -> FrameRef {
        FrameRef {
            video: self.video,
            frame: self.frame_t,
        }
    }

    pub fn at_prev(&self) -> FrameRef {
        FrameRef {
            video: self.video,
            frame: self.frame_t - 1,
        }
    }
}

/// Appearance, identity, and expression frame pairs for one training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTriplet {
    pub appearance: FramePair,
    pub identity: FramePair,
    pub expression: FramePair,
    pub provenance: Provenance,
}

impl SampleTriplet {
    pub fn pairs(&self) -> [FramePair; 3] {
        [self.appearance, self.identity, self.expression]
    }

    /// Checks consecutiveness, index bounds, and the intra/inter video
    /// constraints against a manifest.
    pub fn validate(&self, manifest: &DatasetManifest) -> Result<()> {
        for pair in self.pairs() {
            let video = manifest
                .videos
                .get(pair.video)
                .ok_or_else(|| Error::InvalidManifest(format!("video {} missing", pair.video)))?;
            if pair.frame_t < 2 || pair.frame_t > video.frames {
                return Err(Error::InvalidManifest(format!(
                    "frame {} outside [2, {}]",
                    pair.frame_t, video.frames
                )));
            }
        }
        let [a, i, e] = self.pairs();
        match self.provenance {
            Provenance::Intra => {
                if a.video != i.video || i.video != e.video {
                    return Err(Error::InvalidManifest(
                        "intra triplet spans multiple videos".into(),
                    ));
                }
            }
            Provenance::Inter => {
                if a.video == i.video || i.video == e.video || a.video == e.video {
                    return Err(Error::InvalidManifest(
                        "inter triplet repeats a video".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn draw_pair(rng: &mut impl Rng, video: usize, frames: u32) -> FramePair {
    FramePair {
        video,
        frame_t: rng.random_range(2..=frames),
    }
}

/// Draws one triplet: intra-video with probability `sigma`, inter-video
/// otherwise. Inter-video draws need at least three videos.
pub fn sample(
    manifest: &DatasetManifest,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<SampleTriplet> {
    manifest.validate()?;
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidManifest(format!(
            "sigma must be in [0, 1], got {sigma}"
        )));
    }
    let n = manifest.video_count();
    let intra = rng.random::<f64>() < sigma;
    if intra {
        let video = rng.random_range(0..n);
        let frames = manifest.videos[video].frames;
        Ok(SampleTriplet {
            appearance: draw_pair(rng, video, frames),
            identity: draw_pair(rng, video, frames),
            expression: draw_pair(rng, video, frames),
            provenance: Provenance::Intra,
        })
    } else {
        if n < 3 {
            return Err(Error::InsufficientVideos { available: n });
        }
        // Rejection sampling over uniform triples keeps each marginal
        // uniform over videos.
        let (v1, v2, v3) = loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let c = rng.random_range(0..n);
            if a != b && b != c && a != c {
                break (a, b, c);
            }
        };
        Ok(SampleTriplet {
            appearance: draw_pair(rng, v1, manifest.videos[v1].frames),
            identity: draw_pair(rng, v2, manifest.videos[v2].frames),
            expression: draw_pair(rng, v3, manifest.videos[v3].frames),
            provenance: Provenance::Inter,
        })
    }
}

/// Deterministic summary of a seeded sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub intra_count: usize,
    pub intra_fraction: f64,
    /// Hits per video over all drawn video slots (3 per triplet).
    pub video_hits: Vec<u64>,
}

/// Runs `count` seeded draws and summarizes mode fractions and per-video
/// usage. The histogram counts one slot per triplet role, so it always
/// sums to `3 * count`.
pub fn sample_stats(
    manifest: &DatasetManifest,
    sigma: f64,
    seed: u64,
    count: usize,
) -> Result<SampleStats> {
    if count == 0 {
        return Err(Error::InvalidManifest("stats need count >= 1".into()));
    }
    let mut rng = sampler_rng(seed);
    let mut intra_count = 0;
    let mut video_hits = vec![0u64; manifest.video_count()];
    for _ in 0..count {
        let triplet = sample(manifest, sigma, &mut rng)?;
        if triplet.provenance == Provenance::Intra {
            intra_count += 1;
        }
        for pair in triplet.pairs() {
            video_hits[pair.video] += 1;
        }
    }
    Ok(SampleStats {
        count,
        intra_count,
        intra_fraction: intra_count as f64 / count as f64,
        video_hits,
    })
}
