//! Crate-wide error type.

use std::fmt;

/// Errors produced by the geometry, normalization, and sampling kernels.
#[derive(Debug)]
pub enum Error {
    /// Coefficient vector length does not match the basis rank it drives.
    RankMismatch {
        which: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Two grids/buffers that must agree in shape do not.
    ShapeMismatch(String),

    /// Blendshape model violates a structural invariant.
    InvalidModel(String),

    /// Camera pose violates orthonormality or positive-scale constraints.
    InvalidCamera(String),

    /// Per-vertex texture has out-of-range or non-finite components.
    InvalidTexture(String),

    /// A masked region contains no active pixels.
    EmptyRegion,

    /// Requested layer/loss mode is not provided by this crate.
    UnsupportedMode(String),

    /// Inter-video sampling needs at least three videos.
    InsufficientVideos { available: usize },

    /// Dataset manifest violates a structural invariant.
    InvalidManifest(String),

    /// Adversarial score lists are empty or inconsistent.
    EmptyScores,

    /// Underlying I/O failure.
    Io(std::io::Error),

    /// A file did not parse as the expected format.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RankMismatch {
                which,
                expected,
                actual,
            } => write!(
                f,
                "{which} coefficient length {actual} does not match basis rank {expected}"
            ),
            Self::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Self::InvalidModel(msg) => write!(f, "invalid blendshape model: {msg}"),
            Self::InvalidCamera(msg) => write!(f, "invalid camera pose: {msg}"),
            Self::InvalidTexture(msg) => write!(f, "invalid texture map: {msg}"),
            Self::EmptyRegion => write!(f, "masked region has no active pixels"),
            Self::UnsupportedMode(mode) => write!(f, "unsupported mode: {mode}"),
            Self::InsufficientVideos { available } => write!(
                f,
                "inter-video sampling needs at least 3 videos, manifest has {available}"
            ),
            Self::InvalidManifest(msg) => write!(f, "invalid dataset manifest: {msg}"),
            Self::EmptyScores => write!(f, "adversarial score lists are empty"),
            Self::Io(err) => write!(f, "i/o error: {err}"),
            Self::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Self::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
