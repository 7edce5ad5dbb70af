//! Frames, LWIR-to-RGB registration and alpha-blend fusion.

mod frame;
mod fusion;
mod homography;
mod synthetic;

use std::path::PathBuf;

pub use frame::{Frame, FusionLevel, Modality};
pub use fusion::{blend, blend_channel};
pub use homography::{register, Homography};
pub use synthetic::{generate_synthetic_pair, palettize, SceneSpec};

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("fusion level must be a multiple of 10 in [0, 100], got {0}")]
    InvalidFusionLevel(i64),
    #[error("cannot parse fusion level from {0:?}")]
    UnparsableFusionLevel(String),
    #[error("expected a {expected} frame, got {actual}")]
    WrongModality {
        expected: Modality,
        actual: Modality,
    },
    #[error("cannot fuse frames of different shapes: rgb {rgb:?} vs lwir {lwir:?}")]
    ShapeMismatch { rgb: (u32, u32), lwir: (u32, u32) },
    #[error("homography is not invertible (determinant {0:e})")]
    SingularHomography(f64),
    #[error("homography needs 9 finite coefficients, got {0}")]
    HomographyShape(usize),
    #[error("registration target must be non-empty, got {width}x{height}")]
    EmptyTarget { width: u32, height: u32 },
    #[error(
        "target disc at ({cx}, {cy}) radius {radius} does not fit in a {width}x{height} frame"
    )]
    DiscOutOfBounds {
        cx: f64,
        cy: f64,
        radius: f64,
        width: u32,
        height: u32,
    },
    #[error("failed to decode {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("failed to write {path}: {source}")]
    Encode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("failed to decode in-memory image: {0}")]
    DecodeMemory(image::ImageError),
    #[error("failed to encode in-memory image: {0}")]
    EncodeMemory(image::ImageError),
}
