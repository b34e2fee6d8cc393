//! Loss arithmetic for the blending objective.
//!
//! Pure functions over images, extracted features, and discriminator
//! score maps. No networks live here: the appearance embedder enters as a
//! [`FeatureExtractor`] and the discriminator as precomputed per-scale
//! scores. L1 terms are means (not sums) of absolute differences so values
//! are resolution-independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rasterizer::Image;
use crate::rcn::{FeatureMap, FeatureRole};
use crate::sampling::Provenance;

/// Weights of the four objective terms. Defaults are the published
/// training configuration: adversarial 10, appearance 1, reconstruction
/// 10, temporal 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub adv: f64,
    pub app: f64,
    pub rec: f64,
    pub tmp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            adv: 10.0,
            app: 1.0,
            rec: 10.0,
            tmp: 5.0,
        }
    }
}

impl LossWeights {
    pub fn new(adv: f64, app: f64, rec: f64, tmp: f64) -> Result<Self> {
        for (name, w) in [("adv", adv), ("app", app), ("rec", rec), ("tmp", tmp)] {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::ShapeMismatch(format!(
                    "loss weight {name} must be nonnegative, got {w}"
                )));
            }
        }
        Ok(Self { adv, app, rec, tmp })
    }
}

/// Stand-in for the appearance embedder: any deterministic map from an
/// image to a feature grid, same output shape for same input shape.
pub trait FeatureExtractor {
    fn extract(&self, image: &Image) -> FeatureMap;
}

/// Passes RGB channels through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn extract(&self, image: &Image) -> FeatureMap {
        let (w, h) = (image.width(), image.height());
        let mut out = FeatureMap::zeros(3, h, w);
        for row in 0..h {
            for col in 0..w {
                let px = image.pixel(row, col);
                for ch in 0..3 {
                    out.set(ch, row, col, px[ch]);
                }
            }
        }
        out.with_role(FeatureRole::Appearance)
    }
}

/// Fixed average-pooling pyramid: level `l` box-filters the image with a
/// `2^l`-sized window anchored at each pixel (clamped at the borders),
/// stacking `3 * levels` channels. Deterministic, no learned state.
#[derive(Debug, Clone, Copy)]
pub struct AvgPoolPyramid {
    pub levels: usize,
}

impl AvgPoolPyramid {
    pub fn new(levels: usize) -> Self {
        Self { levels: levels.max(1) }
    }
}

impl FeatureExtractor for AvgPoolPyramid {
    fn extract(&self, image: &Image) -> FeatureMap {
        let (w, h) = (image.width(), image.height());
        let mut out = FeatureMap::zeros(3 * self.levels, h, w);
        for level in 0..self.levels {
            let span = 1usize << level;
            for row in 0..h {
                for col in 0..w {
                    let mut acc = [0.0; 3];
                    let mut n = 0usize;
                    for yy in row..(row + span).min(h) {
                        for xx in col..(col + span).min(w) {
                            let px = image.pixel(yy, xx);
                            for ch in 0..3 {
                                acc[ch] += px[ch];
                            }
                            n += 1;
                        }
                    }
                    for ch in 0..3 {
                        out.set(3 * level + ch, row, col, acc[ch] / n as f64);
                    }
                }
            }
        }
        out.with_role(FeatureRole::Appearance)
    }
}

/// Mean absolute difference between extracted features of the output and
/// the appearance source.
pub fn appearance_loss(
    extractor: &dyn FeatureExtractor,
    y: &Image,
    x_p: &Image,
) -> Result<f64> {
    let fy = extractor.extract(y);
    let fp = extractor.extract(x_p);
    if !fy.same_shape(&fp) {
        return Err(Error::ShapeMismatch(format!(
            "extractor produced {}x{}x{} vs {}x{}x{}",
            fy.channels(),
            fy.height(),
            fy.width(),
            fp.channels(),
            fp.height(),
            fp.width()
        )));
    }
    let n = fy.data().len();
    if n == 0 {
        return Err(Error::ShapeMismatch("extractor produced empty features".into()));
    }
    let sum: f64 = fy
        .data()
        .iter()
        .zip(fp.data())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Mean absolute pixel difference against the identity source, defined
/// only for intra-video triplets; identically zero for inter-video ones.
pub fn reconstruction_loss(y: &Image, x_i: &Image, provenance: Provenance) -> Result<f64> {
    if !y.same_shape(x_i) {
        return Err(Error::ShapeMismatch("image shapes differ".into()));
    }
    if y.pixels().is_empty() {
        return Err(Error::ShapeMismatch("empty image".into()));
    }
    if provenance == Provenance::Inter {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (a, b) in y.pixels().iter().zip(x_i.pixels()) {
        for ch in 0..3 {
            sum += (a[ch] - b[ch]).abs();
        }
    }
    Ok(sum / (y.pixels().len() * 3) as f64)
}

/// Per-scale discriminator outputs on real and generated images.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleScores {
    real: Vec<Vec<f64>>,
    fake: Vec<Vec<f64>>,
}

impl ScaleScores {
    pub fn new(real: Vec<Vec<f64>>, fake: Vec<Vec<f64>>) -> Result<Self> {
        if real.is_empty() || real.len() != fake.len() {
            return Err(Error::EmptyScores);
        }
        for map in real.iter().chain(&fake) {
            if map.is_empty() || map.iter().any(|v| !v.is_finite()) {
                return Err(Error::EmptyScores);
            }
        }
        Ok(Self { real, fake })
    }

    pub fn scales(&self) -> usize {
        self.real.len()
    }
}

/// Form of the per-scale adversarial term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvVariant {
    /// Cross-entropy on probability scores: `log D(x) + log(1 - D(y))`,
    /// the shared minimax value for both players.
    Log,
    /// Margin form on raw scores.
    Hinge,
}

/// Which player's objective to evaluate. Only the hinge form
/// distinguishes the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvSide {
    Generator,
    Discriminator,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Multi-scale adversarial loss: the per-scale term averaged over scales.
pub fn adversarial_loss(scores: &ScaleScores, variant: AdvVariant, side: AdvSide) -> f64 {
    let k = scores.scales() as f64;
    let per_scale = scores.real.iter().zip(&scores.fake).map(|(real, fake)| {
        match (variant, side) {
            (AdvVariant::Log, _) => {
                mean(&real.iter().map(|d| d.ln()).collect::<Vec<_>>())
                    + mean(&fake.iter().map(|d| (1.0 - d).ln()).collect::<Vec<_>>())
            }
            (AdvVariant::Hinge, AdvSide::Discriminator) => {
                mean(&real.iter().map(|s| (1.0 - s).max(0.0)).collect::<Vec<_>>())
                    + mean(&fake.iter().map(|s| (1.0 + s).max(0.0)).collect::<Vec<_>>())
            }
            (AdvVariant::Hinge, AdvSide::Generator) => -mean(fake),
        }
    });
    per_scale.sum::<f64>() / k
}

/// Weighted total objective.
pub fn total_loss(adv: f64, app: f64, rec: f64, tmp: f64, weights: &LossWeights) -> f64 {
    weights.adv * adv + weights.app * app + weights.rec * rec + weights.tmp * tmp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant_image(w: usize, h: usize, v: f64) -> Image {
        Image::from_pixels(w, h, vec![[v; 3]; w * h]).unwrap()
    }

    #[test]
    fn appearance_loss_of_identical_images_is_zero() {
        let img = constant_image(6, 4, 0.4);
        for extractor in [
            &IdentityExtractor as &dyn FeatureExtractor,
            &AvgPoolPyramid::new(3),
        ] {
            assert_eq!(appearance_loss(extractor, &img, &img).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_extractor_measures_constant_offset() {
        let a = constant_image(5, 5, 0.7);
        let b = constant_image(5, 5, 0.2);
        let loss = appearance_loss(&IdentityExtractor, &a, &b).unwrap();
        assert_relative_eq!(loss, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pyramid_extractor_matches_loop_oracle() {
        // Hand fixture: 2x2 image, 2-level pyramid.
        let img = Image::from_pixels(
            2,
            2,
            vec![
                [0.1, 0.2, 0.3],
                [0.5, 0.6, 0.7],
                [0.9, 0.8, 0.7],
                [0.3, 0.2, 0.1],
            ],
        )
        .unwrap();
        let other = constant_image(2, 2, 0.0);
        let loss = appearance_loss(&AvgPoolPyramid::new(2), &img, &other).unwrap();

        // Oracle: level 0 is the image itself; level 1 averages the clamped
        // 2x2 window anchored at each pixel.
        let px = |r: usize, c: usize| img.pixel(r, c);
        let mut features: Vec<f64> = Vec::new();
        for ch in 0..3 {
            for r in 0..2 {
                for c in 0..2 {
                    features.push(px(r, c)[ch]);
                }
            }
        }
        for ch in 0..3 {
            for r in 0..2 {
                for c in 0..2 {
                    let mut acc = 0.0;
                    let mut n = 0;
                    for rr in r..2.min(r + 2) {
                        for cc in c..2.min(c + 2) {
                            acc += px(rr, cc)[ch];
                            n += 1;
                        }
                    }
                    features.push(acc / n as f64);
                }
            }
        }
        let oracle: f64 = features.iter().map(|v| v.abs()).sum::<f64>() / features.len() as f64;
        assert_relative_eq!(loss, oracle, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_loss_modes() {
        let a = constant_image(4, 4, 0.75);
        let b = constant_image(4, 4, 0.5);
        assert_eq!(reconstruction_loss(&a, &a, Provenance::Intra).unwrap(), 0.0);
        assert_eq!(reconstruction_loss(&a, &b, Provenance::Inter).unwrap(), 0.0);
        assert_relative_eq!(
            reconstruction_loss(&a, &b, Provenance::Intra).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        let tall = constant_image(4, 5, 0.5);
        assert!(reconstruction_loss(&a, &tall, Provenance::Intra).is_err());
    }

    #[test]
    fn losses_are_symmetric_in_their_images() {
        let a = constant_image(3, 3, 0.9);
        let b = constant_image(3, 3, 0.15);
        assert_eq!(
            reconstruction_loss(&a, &b, Provenance::Intra).unwrap(),
            reconstruction_loss(&b, &a, Provenance::Intra).unwrap()
        );
        assert_eq!(
            appearance_loss(&IdentityExtractor, &a, &b).unwrap(),
            appearance_loss(&IdentityExtractor, &b, &a).unwrap()
        );
    }

    #[test]
    fn hinge_discriminator_zero_when_margins_met() {
        let scores = ScaleScores::new(
            vec![vec![1.0, 1.5, 2.0], vec![1.2]],
            vec![vec![-1.0, -3.0], vec![-1.1, -2.0]],
        )
        .unwrap();
        assert_eq!(
            adversarial_loss(&scores, AdvVariant::Hinge, AdvSide::Discriminator),
            0.0
        );
    }

    #[test]
    fn hinge_averages_over_scales() {
        // Scale 1: relu(1 - 0.8) + relu(1 + (-0.8)) = 0.2 + 0.2 = 0.4.
        // Scale 2: relu(1 - 0.7) + relu(1 + (-0.7)) = 0.3 + 0.3 = 0.6.
        let scores =
            ScaleScores::new(vec![vec![0.8], vec![0.7]], vec![vec![-0.8], vec![-0.7]]).unwrap();
        assert_relative_eq!(
            adversarial_loss(&scores, AdvVariant::Hinge, AdvSide::Discriminator),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hinge_generator_negates_fake_mean() {
        let scores = ScaleScores::new(vec![vec![1.0]], vec![vec![0.25, 0.75]]).unwrap();
        assert_relative_eq!(
            adversarial_loss(&scores, AdvVariant::Hinge, AdvSide::Generator),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn log_variant_perfect_discriminator_is_zero() {
        let scores = ScaleScores::new(vec![vec![1.0, 1.0]], vec![vec![0.0, 0.0]]).unwrap();
        for side in [AdvSide::Generator, AdvSide::Discriminator] {
            assert_eq!(adversarial_loss(&scores, AdvVariant::Log, side), 0.0);
        }
    }

    #[test]
    fn copies_of_one_scale_change_nothing() {
        let one = ScaleScores::new(vec![vec![0.6, 0.9]], vec![vec![-0.2, 0.3]]).unwrap();
        let four = ScaleScores::new(
            vec![vec![0.6, 0.9]; 4],
            vec![vec![-0.2, 0.3]; 4],
        )
        .unwrap();
        for (variant, side) in [
            (AdvVariant::Hinge, AdvSide::Discriminator),
            (AdvVariant::Hinge, AdvSide::Generator),
        ] {
            assert_relative_eq!(
                adversarial_loss(&one, variant, side),
                adversarial_loss(&four, variant, side),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn empty_scores_are_rejected() {
        assert!(ScaleScores::new(vec![], vec![]).is_err());
        assert!(ScaleScores::new(vec![vec![1.0]], vec![]).is_err());
        assert!(ScaleScores::new(vec![vec![]], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn total_loss_uses_published_weights() {
        let w = LossWeights::default();
        assert_eq!(total_loss(0.0, 0.0, 0.0, 0.0, &w), 0.0);
        assert_eq!(total_loss(1.0, 1.0, 1.0, 1.0, &w), 26.0);
        // Inter-video: reconstruction and temporal terms forced to zero.
        assert_eq!(total_loss(1.0, 1.0, 0.0, 0.0, &w), 11.0);
    }

    #[test]
    fn total_loss_is_linear_per_component() {
        let w = LossWeights::default();
        let base = total_loss(0.3, 0.2, 0.1, 0.4, &w);
        let doubled = total_loss(0.3, 0.4, 0.1, 0.4, &w);
        assert_relative_eq!(doubled - base, w.app * 0.2, epsilon = 1e-12);
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(LossWeights::new(1.0, -0.5, 1.0, 1.0).is_err());
        assert!(LossWeights::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn empty_images_are_rejected_not_nan() {
        let empty = Image::new(0, 0);
        assert!(reconstruction_loss(&empty, &empty, Provenance::Intra).is_err());
        assert!(reconstruction_loss(&empty, &empty, Provenance::Inter).is_err());
        assert!(appearance_loss(&IdentityExtractor, &empty, &empty).is_err());
    }
}
