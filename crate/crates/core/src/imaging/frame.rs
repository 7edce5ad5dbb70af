use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ImagingError;

/// Which sensor (or blend of sensors) produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Rgb,
    Lwir,
    Fused,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Rgb => "RGB",
            Modality::Lwir => "LWIR",
            Modality::Fused => "Fused",
        })
    }
}

/// An 8-bit, 3-channel raster stored row-major as `[r, g, b, r, g, b, ...]`.
///
/// LWIR frames are expected to be already palettized to three channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    modality: Modality,
    pixels: Vec<u8>,
    timestamp_ms: i64,
}

impl Frame {
    pub fn new(
        width: u32,
        height: u32,
        modality: Modality,
        pixels: Vec<u8>,
        timestamp_ms: i64,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyFrame { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(ImagingError::BufferLength {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            modality,
            pixels,
            timestamp_ms,
        })
    }

    /// A frame where every pixel has the same color.
    pub fn filled(
        width: u32,
        height: u32,
        modality: Modality,
        color: [u8; 3],
        timestamp_ms: i64,
    ) -> Result<Self, ImagingError> {
        let n = width as usize * height as usize;
        let pixels = color.iter().copied().cycle().take(n * 3).collect();
        Self::new(width, height, modality, pixels, timestamp_ms)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp_ms
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = modality;
        self
    }

    pub fn with_timestamp(mut self, timestamp_ms: i64) -> Self {
        self.timestamp_ms = timestamp_ms;
        self
    }

    /// Decodes any 8-bit raster the `image` crate understands and converts it to RGB.
    pub fn read_png(
        path: &Path,
        modality: Modality,
        timestamp_ms: i64,
    ) -> Result<Self, ImagingError> {
        let img = image::open(path)
            .map_err(|source| ImagingError::Decode {
                path: path.to_path_buf(),
                source,
            })?
            .into_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w, h, modality, img.into_raw(), timestamp_ms)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), ImagingError> {
        image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )
        .map_err(|source| ImagingError::Encode {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Lossless PNG encoding in memory.
    pub fn encode_png(&self) -> Result<Vec<u8>, ImagingError> {
        let mut out = Vec::new();
        image::write_buffer_with_format(
            &mut std::io::Cursor::new(&mut out),
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )
        .map_err(ImagingError::EncodeMemory)?;
        Ok(out)
    }

    pub fn decode_png(
        bytes: &[u8],
        modality: Modality,
        timestamp_ms: i64,
    ) -> Result<Self, ImagingError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(ImagingError::DecodeMemory)?
            .into_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w, h, modality, img.into_raw(), timestamp_ms)
    }
}

/// Blend weight stored as an integer RGB percentage so the eleven-level grid
/// never accumulates floating point drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FusionLevel(u8);

impl FusionLevel {
    pub const RGB_ONLY: FusionLevel = FusionLevel(100);
    pub const LWIR_ONLY: FusionLevel = FusionLevel(0);

    pub fn new(rgb_percent: u8) -> Result<Self, ImagingError> {
        if rgb_percent > 100 || !rgb_percent.is_multiple_of(10) {
            return Err(ImagingError::InvalidFusionLevel(rgb_percent as i64));
        }
        Ok(Self(rgb_percent))
    }

    /// All eleven levels, from pure RGB down to pure LWIR.
    pub fn all() -> impl DoubleEndedIterator<Item = FusionLevel> + ExactSizeIterator {
        (0..=10u8).rev().map(|i| FusionLevel(i * 10))
    }

    pub fn rgb_percent(self) -> u8 {
        self.0
    }

    pub fn lwir_percent(self) -> u8 {
        100 - self.0
    }

    /// Blend weight of the RGB input, in `[0, 1]`.
    pub fn alpha(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl TryFrom<u8> for FusionLevel {
    type Error = ImagingError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        FusionLevel::new(value)
    }
}

impl From<FusionLevel> for u8 {
    fn from(level: FusionLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for FusionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0, 100 - self.0)
    }
}

impl std::str::FromStr for FusionLevel {
    type Err = ImagingError;

    /// Accepts `80`, `80/20` or `f80`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let head = s.split('/').next().unwrap_or(s);
        let head = head.trim_start_matches(['f', 'F']);
        let pct: i64 = head
            .parse()
            .map_err(|_| ImagingError::UnparsableFusionLevel(s.to_string()))?;
        if !(0..=100).contains(&pct) {
            return Err(ImagingError::InvalidFusionLevel(pct));
        }
        let level = FusionLevel::new(pct as u8)?;
        if let Some(rest) = s.split('/').nth(1) {
            let lwir: i64 = rest
                .trim()
                .parse()
                .map_err(|_| ImagingError::UnparsableFusionLevel(s.to_string()))?;
            if lwir != i64::from(level.lwir_percent()) {
                return Err(ImagingError::UnparsableFusionLevel(s.to_string()));
            }
        }
        Ok(level)
    }
}
