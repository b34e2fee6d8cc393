//! Geometry and loss kernels for temporally consistent facial video
//! synthesis.
//!
//! The crate covers the non-neural core of a face blending pipeline:
//!
//! - [`morphable_model`]: linear blendshape reconstruction, coefficient
//!   recombination, and weak-perspective projection.
//! - [`rasterizer`]: z-buffer triangle rasterization with barycentric
//!   attribution, facial masks, and appearance hints.
//! - [`temporal_flow`]: dense mesh-derived optical flow with visibility
//!   reasoning, backward warping, and the temporal consistency loss.
//! - [`rcn`]: region-aware conditional normalization with verified
//!   analytic gradients.
//! - [`sampling`]: seeded intra/inter-video training triplet selection.
//! - [`losses`]: appearance, reconstruction, adversarial, and total
//!   objective arithmetic.
//! - [`io`]: PPM images, Middlebury `.flo` flow files, raw f64 planes,
//!   and blendshape model files.
//!
//! Everything is deterministic given its inputs; randomized pieces take
//! explicit seeds. All kernels are pure functions safe to call
//! concurrently on shared read-only data.

pub mod error;
pub mod io;
pub mod losses;
pub mod morphable_model;
pub mod rasterizer;
pub mod rcn;
pub mod sampling;
pub mod temporal_flow;

pub use error::{Error, Result};
pub use morphable_model::{
    project, reconstruct_shape, recombine, Basis, BlendshapeModel, CameraPose, Coefficients,
    Mesh3D, TextureMap,
};
pub use rasterizer::{
    appearance_hint, facial_mask, rasterize, rasterize_projected, BinaryMask, Image,
    RasterOutput,
};
pub use rcn::{
    adain_transfer, masked_moments, rcn_forward, rcn_gradients, rcn_variant, ChannelMoments,
    FeatureMap, FeatureRole, RcnGradients, RcnMode, RcnParams, RcnVariant, RegionMask,
};
pub use sampling::{
    sample, sample_stats, sampler_rng, DatasetManifest, FramePair, Provenance, SampleStats,
    SampleTriplet, SamplerRng, VideoEntry,
};
pub use temporal_flow::{
    dense_flow, interpolate_flow, sparse_flow, temporal_loss, temporal_loss_interior,
    vertex_displacements, visibility_prev, visibility_t, warp, warp_components, DenseFlowField,
    FramePairGeometry,
};
pub use losses::{
    adversarial_loss, appearance_loss, reconstruction_loss, total_loss, AdvSide, AdvVariant,
    AvgPoolPyramid, FeatureExtractor, IdentityExtractor, LossWeights, ScaleScores,
};
