//! Region-aware conditional normalization.
//!
//! Channel statistics are computed separately over a facial region and its
//! complement; the layer blends same-region retention with cross-region
//! moment transfer, weighted per channel by learnable `alpha`/`beta` in
//! [0, 1]. Analytic gradients are provided for all differentiable inputs
//! so the layer can be trained; they are verified against central finite
//! differences in the test suite.
//!
//! Statistics are per-instance (one map at a time) population moments,
//! with the standard deviation floored at [`EPS_STD`]. The floor passes no
//! gradient.

use crate::error::{Error, Result};
use crate::rasterizer::BinaryMask;

/// Lower bound on every channel standard deviation.
pub const EPS_STD: f64 = 1e-5;

/// Default per-channel blend weight for the facial-side transfer term.
pub const DEFAULT_ALPHA: f64 = 0.8;

/// Default per-channel blend weight for the non-facial-side transfer term.
pub const DEFAULT_BETA: f64 = 0.1;

/// What a feature map represents in the blending pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureRole {
    /// Decoder feature in the generator's upsampling path.
    Decoder,
    /// Upsampled appearance-embedding feature.
    Appearance,
}

/// A channel-major C x H x W grid of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    role: FeatureRole,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "feature buffer has {} values, expected {}x{}x{}",
                data.len(),
                channels,
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "feature map contains non-finite values".into(),
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            role: FeatureRole::Decoder,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
            role: FeatureRole::Decoder,
        }
    }

    pub fn with_role(mut self, role: FeatureRole) -> Self {
        self.role = role;
        self
    }

    pub fn role(&self) -> FeatureRole {
        self.role
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.offset(c, y, x)]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f64) {
        let idx = self.offset(c, y, x);
        self.data[idx] = value;
    }

    /// Row-major H x W slice of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.channels == other.channels
            && self.height == other.height
            && self.width == other.width
    }
}

/// Binary H x W region indicator; the complement is derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl RegionMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "region mask has {} entries, expected {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::ShapeMismatch("region mask values must be 0 or 1".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Whole frame active.
    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn active(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    pub fn count_active(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    fn matches(&self, f: &FeatureMap) -> bool {
        self.height == f.height && self.width == f.width
    }
}

impl From<&BinaryMask> for RegionMask {
    fn from(mask: &BinaryMask) -> Self {
        Self {
            height: mask.height(),
            width: mask.width(),
            data: mask.data().to_vec(),
        }
    }
}

/// Learnable per-channel blend weights.
///
/// Raw values are stored unconstrained so optimizer steps cannot corrupt
/// the layer; reads clamp into [0, 1].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RcnParams {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl RcnParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::ShapeMismatch(format!(
                "alpha has {} channels, beta has {}",
                alpha.len(),
                beta.len()
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Paper-default initialization: alpha 0.8, beta 0.1 on every channel.
    pub fn defaults(channels: usize) -> Self {
        Self {
            alpha: vec![DEFAULT_ALPHA; channels],
            beta: vec![DEFAULT_BETA; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.alpha.len()
    }

    /// Clamped facial-side weight for channel `c`.
    pub fn alpha(&self, c: usize) -> f64 {
        self.alpha[c].clamp(0.0, 1.0)
    }

    /// Clamped non-facial-side weight for channel `c`.
    pub fn beta(&self, c: usize) -> f64 {
        self.beta[c].clamp(0.0, 1.0)
    }

    /// Unclamped stored value; gradients apply here.
    pub fn alpha_raw(&self, c: usize) -> f64 {
        self.alpha[c]
    }

    pub fn beta_raw(&self, c: usize) -> f64 {
        self.beta[c]
    }

    pub fn alpha_raw_mut(&mut self) -> &mut [f64] {
        &mut self.alpha
    }

    pub fn beta_raw_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }
}

/// Per-channel mean and floored population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMoments {
    pub mean: Vec<f64>,
    /// Floored standard deviation, always >= [`EPS_STD`].
    pub std: Vec<f64>,
    /// Unfloored standard deviation, kept so gradients can detect the floor.
    pub raw_std: Vec<f64>,
}

/// Per-channel moments of `f` over the active pixels of `m`.
pub fn masked_moments(f: &FeatureMap, m: &RegionMask) -> Result<ChannelMoments> {
    if !m.matches(f) {
        return Err(Error::ShapeMismatch(format!(
            "feature {}x{} vs mask {}x{}",
            f.height, f.width, m.height, m.width
        )));
    }
    let n = m.count_active();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    let mut moments = ChannelMoments {
        mean: Vec::with_capacity(f.channels),
        std: Vec::with_capacity(f.channels),
        raw_std: Vec::with_capacity(f.channels),
    };
    for c in 0..f.channels {
        let plane = f.channel(c);
        let mut sum = 0.0;
        for y in 0..f.height {
            for x in 0..f.width {
                if m.active(y, x) {
                    sum += plane[y * f.width + x];
                }
            }
        }
        let mean = sum / n as f64;
        let mut var = 0.0;
        for y in 0..f.height {
            for x in 0..f.width {
                if m.active(y, x) {
                    let d = plane[y * f.width + x] - mean;
                    var += d * d;
                }
            }
        }
        let raw_std = (var / n as f64).sqrt();
        moments.mean.push(mean);
        moments.std.push(raw_std.max(EPS_STD));
        moments.raw_std.push(raw_std);
    }
    Ok(moments)
}

/// Moment transfer: renormalizes `a`'s masked pixels to carry `b`'s masked
/// channel statistics. Zero outside `mask_a`.
pub fn adain_transfer(
    a: &FeatureMap,
    b: &FeatureMap,
    mask_a: &RegionMask,
    mask_b: &RegionMask,
) -> Result<FeatureMap> {
    if a.channels != b.channels {
        return Err(Error::ShapeMismatch(format!(
            "channel counts differ: {} vs {}",
            a.channels, b.channels
        )));
    }
    let ma = masked_moments(a, mask_a)?;
    let mb = masked_moments(b, mask_b)?;
    let mut out = FeatureMap::zeros(a.channels, a.height, a.width).with_role(a.role);
    for c in 0..a.channels {
        for y in 0..a.height {
            for x in 0..a.width {
                if mask_a.active(y, x) {
                    let v = mb.std[c] * (a.get(c, y, x) - ma.mean[c]) / ma.std[c] + mb.mean[c];
                    out.set(c, y, x, v);
                }
            }
        }
    }
    Ok(out)
}

/// Which of the four combination terms a variant keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TermSet {
    cross_face: bool,
    cross_nonface: bool,
    retain_face: bool,
    retain_nonface: bool,
}

/// Ablation variants of the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcnMode {
    /// All four terms.
    Full,
    /// Both cross-region transfer terms only.
    CrossOnly,
    /// Both same-region retention terms only.
    SameOnly,
    /// Terms supported on the facial region only.
    FacialOnly,
    /// Terms supported on the non-facial region only.
    NonFacialOnly,
    /// Plain global moment transfer, no regions, no blend weights.
    Adain,
    /// Not provided: needs a learned convolutional parameter predictor.
    SpadeLike,
}

/// A configured forward pass for one [`RcnMode`].
#[derive(Debug, Clone, Copy)]
pub struct RcnVariant {
    mode: RcnMode,
}

/// Builds the forward configuration for `mode`; `SpadeLike` is rejected.
pub fn rcn_variant(mode: RcnMode) -> Result<RcnVariant> {
    if mode == RcnMode::SpadeLike {
        return Err(Error::UnsupportedMode(
            "spade_like requires a learned parameter predictor".into(),
        ));
    }
    Ok(RcnVariant { mode })
}

impl RcnVariant {
    pub fn mode(&self) -> RcnMode {
        self.mode
    }

    pub fn forward(
        &self,
        u: &FeatureMap,
        t: &FeatureMap,
        h: &RegionMask,
        params: &RcnParams,
    ) -> Result<FeatureMap> {
        let terms = match self.mode {
            RcnMode::Full => TermSet {
                cross_face: true,
                cross_nonface: true,
                retain_face: true,
                retain_nonface: true,
            },
            RcnMode::CrossOnly => TermSet {
                cross_face: true,
                cross_nonface: true,
                retain_face: false,
                retain_nonface: false,
            },
            RcnMode::SameOnly => TermSet {
                cross_face: false,
                cross_nonface: false,
                retain_face: true,
                retain_nonface: true,
            },
            RcnMode::FacialOnly => TermSet {
                cross_face: true,
                cross_nonface: false,
                retain_face: true,
                retain_nonface: false,
            },
            RcnMode::NonFacialOnly => TermSet {
                cross_face: false,
                cross_nonface: true,
                retain_face: false,
                retain_nonface: true,
            },
            RcnMode::Adain => return adain_global(u, t),
            RcnMode::SpadeLike => unreachable!("rejected at construction"),
        };
        forward_with_terms(u, t, h, params, terms)
    }
}

fn check_forward_shapes(
    u: &FeatureMap,
    t: &FeatureMap,
    h: &RegionMask,
    params: &RcnParams,
) -> Result<()> {
    if !u.same_shape(t) {
        return Err(Error::ShapeMismatch(format!(
            "decoder {}x{}x{} vs appearance {}x{}x{}",
            u.channels, u.height, u.width, t.channels, t.height, t.width
        )));
    }
    if !h.matches(u) {
        return Err(Error::ShapeMismatch(format!(
            "features {}x{} vs mask {}x{}",
            u.height, u.width, h.height, h.width
        )));
    }
    if params.channels() != u.channels {
        return Err(Error::ShapeMismatch(format!(
            "params carry {} channels, features {}",
            params.channels(),
            u.channels
        )));
    }
    Ok(())
}

/// Plain AdaIN baseline: whole-frame moments, `u` restyled to `t`'s stats.
fn adain_global(u: &FeatureMap, t: &FeatureMap) -> Result<FeatureMap> {
    if !u.same_shape(t) {
        return Err(Error::ShapeMismatch("adain inputs differ in shape".into()));
    }
    let full = RegionMask::full(u.height, u.width);
    adain_transfer(u, t, &full, &full)
}

fn forward_with_terms(
    u: &FeatureMap,
    t: &FeatureMap,
    h: &RegionMask,
    params: &RcnParams,
    terms: TermSet,
) -> Result<FeatureMap> {
    check_forward_shapes(u, t, h, params)?;
    let hbar = h.complement();
    let n_face = h.count_active();
    let n_nonface = hbar.count_active();

    // With either region empty no statistics exist for it, so both cross
    // terms drop and the surviving side keeps its content at full weight.
    if n_face == 0 || n_nonface == 0 {
        let mut out = FeatureMap::zeros(u.channels, u.height, u.width);
        let (src, mask, enabled) = if n_face == 0 {
            (t, &hbar, terms.retain_nonface || terms.cross_nonface)
        } else {
            (u, h, terms.retain_face || terms.cross_face)
        };
        if enabled {
            for c in 0..u.channels {
                for y in 0..u.height {
                    for x in 0..u.width {
                        if mask.active(y, x) {
                            out.set(c, y, x, src.get(c, y, x));
                        }
                    }
                }
            }
        }
        return Ok(out);
    }

    let mu = masked_moments(u, h)?;
    let mt = masked_moments(t, &hbar)?;
    let mut out = FeatureMap::zeros(u.channels, u.height, u.width);
    for c in 0..u.channels {
        let a = params.alpha(c);
        let b = params.beta(c);
        for y in 0..u.height {
            for x in 0..u.width {
                let mut v = 0.0;
                if h.active(y, x) {
                    let up = u.get(c, y, x);
                    if terms.cross_face {
                        v += a * (mt.std[c] * (up - mu.mean[c]) / mu.std[c] + mt.mean[c]);
                    }
                    if terms.retain_face {
                        v += (1.0 - a) * up;
                    }
                } else {
                    let tp = t.get(c, y, x);
                    if terms.cross_nonface {
                        v += b * (mu.std[c] * (tp - mt.mean[c]) / mt.std[c] + mu.mean[c]);
                    }
                    if terms.retain_nonface {
                        v += (1.0 - b) * tp;
                    }
                }
                out.set(c, y, x, v);
            }
        }
    }
    Ok(out)
}

/// The full four-term layer.
pub fn rcn_forward(
    u: &FeatureMap,
    t: &FeatureMap,
    h: &RegionMask,
    params: &RcnParams,
) -> Result<FeatureMap> {
    forward_with_terms(
        u,
        t,
        h,
        params,
        TermSet {
            cross_face: true,
            cross_nonface: true,
            retain_face: true,
            retain_nonface: true,
        },
    )
}

/// Vector-Jacobian products of the full layer.
#[derive(Debug, Clone)]
pub struct RcnGradients {
    pub grad_u: FeatureMap,
    pub grad_t: FeatureMap,
    pub grad_alpha: Vec<f64>,
    pub grad_beta: Vec<f64>,
}

/// Backpropagates `upstream` through [`rcn_forward`].
///
/// The mask is treated as constant; floored standard deviations pass no
/// gradient; the clamp on `alpha`/`beta` passes gradient only for raw
/// values strictly inside (0, 1).
pub fn rcn_gradients(
    u: &FeatureMap,
    t: &FeatureMap,
    h: &RegionMask,
    params: &RcnParams,
    upstream: &FeatureMap,
) -> Result<RcnGradients> {
    check_forward_shapes(u, t, h, params)?;
    if !upstream.same_shape(u) {
        return Err(Error::ShapeMismatch(
            "upstream gradient shape differs from output shape".into(),
        ));
    }
    let hbar = h.complement();
    let n_face = h.count_active();
    let n_nonface = hbar.count_active();
    let channels = u.channels;
    let mut grads = RcnGradients {
        grad_u: FeatureMap::zeros(channels, u.height, u.width),
        grad_t: FeatureMap::zeros(channels, u.height, u.width),
        grad_alpha: vec![0.0; channels],
        grad_beta: vec![0.0; channels],
    };

    // Degenerate regions reduce the layer to a plain copy of one side.
    if n_face == 0 || n_nonface == 0 {
        let (grad, mask) = if n_face == 0 {
            (&mut grads.grad_t, &hbar)
        } else {
            (&mut grads.grad_u, h)
        };
        for c in 0..channels {
            for y in 0..u.height {
                for x in 0..u.width {
                    if mask.active(y, x) {
                        grad.set(c, y, x, upstream.get(c, y, x));
                    }
                }
            }
        }
        return Ok(grads);
    }

    let mu = masked_moments(u, h)?;
    let mt = masked_moments(t, &hbar)?;
    let clamp_open = |raw: f64| raw > 0.0 && raw < 1.0;

    for c in 0..channels {
        let a = params.alpha(c);
        let b = params.beta(c);
        let (mu1, s1, s1_raw) = (mu.mean[c], mu.std[c], mu.raw_std[c]);
        let (mu2, s2, s2_raw) = (mt.mean[c], mt.std[c], mt.raw_std[c]);

        // Per-channel reductions over the upstream gradient.
        let mut g_face = 0.0; // sum of g over the facial region
        let mut g_nonface = 0.0;
        let mut gdev_face = 0.0; // sum of g * (u - mu1)
        let mut gdev_nonface = 0.0; // sum of g * (t - mu2)
        let mut d_alpha = 0.0;
        let mut d_beta = 0.0;
        for y in 0..u.height {
            for x in 0..u.width {
                let g = upstream.get(c, y, x);
                if h.active(y, x) {
                    let up = u.get(c, y, x);
                    g_face += g;
                    gdev_face += g * (up - mu1);
                    d_alpha += g * (s2 * (up - mu1) / s1 + mu2 - up);
                } else {
                    let tp = t.get(c, y, x);
                    g_nonface += g;
                    gdev_nonface += g * (tp - mu2);
                    d_beta += g * (s1 * (tp - mu2) / s2 + mu1 - tp);
                }
            }
        }
        if clamp_open(params.alpha_raw(c)) {
            grads.grad_alpha[c] = d_alpha;
        }
        if clamp_open(params.beta_raw(c)) {
            grads.grad_beta[c] = d_beta;
        }

        // Sensitivity of the whole output to each region's mean and raw std.
        let dmean_u = (-a * s2 / s1) * g_face + b * g_nonface;
        let dstd_u = if s1_raw > EPS_STD {
            -a * s2 * gdev_face / (s1 * s1) + b * gdev_nonface / s2
        } else {
            0.0
        };
        let dmean_t = a * g_face + (-b * s1 / s2) * g_nonface;
        let dstd_t = if s2_raw > EPS_STD {
            a * gdev_face / s1 - b * s1 * gdev_nonface / (s2 * s2)
        } else {
            0.0
        };

        for y in 0..u.height {
            for x in 0..u.width {
                let g = upstream.get(c, y, x);
                if h.active(y, x) {
                    let up = u.get(c, y, x);
                    let mut grad = g * (a * s2 / s1 + 1.0 - a);
                    grad += dmean_u / n_face as f64;
                    if s1_raw > EPS_STD {
                        grad += dstd_u * (up - mu1) / (n_face as f64 * s1_raw);
                    }
                    grads.grad_u.set(c, y, x, grad);
                } else {
                    let tp = t.get(c, y, x);
                    let mut grad = g * (b * s1 / s2 + 1.0 - b);
                    grad += dmean_t / n_nonface as f64;
                    if s2_raw > EPS_STD {
                        grad += dstd_t * (tp - mu2) / (n_nonface as f64 * s2_raw);
                    }
                    grads.grad_t.set(c, y, x, grad);
                }
            }
        }
    }
    Ok(grads)
}
