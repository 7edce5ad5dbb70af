use serde::{Deserialize, Serialize};

use super::{Frame, ImagingError, Modality};

/// Synthetic palette mapping an 8-bit thermal intensity to three channels.
pub fn palettize(intensity: u8) -> [u8; 3] {
    let v = u16::from(intensity);
    [intensity, (v * 3 / 4) as u8, (v / 2) as u8]
}

/// Descriptor for a co-registered RGB/LWIR fixture pair containing one warm
/// disc (the stand-in for a mug) on a flat background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    /// Gray level of the RGB background.
    pub background: u8,
    /// Thermal intensity of the LWIR background, before palettization.
    pub lwir_background: u8,
    pub center_x: f64,
    pub center_y: f64,
    /// Zero means no target at all.
    pub radius: f64,
    pub disc_rgb: [u8; 3],
    pub disc_lwir: u8,
    pub timestamp_ms: i64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            background: 96,
            lwir_background: 24,
            center_x: 32.0,
            center_y: 32.0,
            radius: 8.0,
            disc_rgb: [235, 235, 235],
            disc_lwir: 230,
            timestamp_ms: 0,
        }
    }
}

impl SceneSpec {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        if self.radius <= 0.0 {
            return false;
        }
        let dx = f64::from(x) - self.center_x;
        let dy = f64::from(y) - self.center_y;
        dx * dx + dy * dy <= self.radius * self.radius
    }

    /// Normalized `(cx, cy, w, h)` box around the disc.
    pub fn truth_bbox(&self) -> Option<[f64; 4]> {
        if self.radius <= 0.0 {
            return None;
        }
        let w = f64::from(self.width);
        let h = f64::from(self.height);
        Some([
            (self.center_x + 0.5) / w,
            (self.center_y + 0.5) / h,
            (2.0 * self.radius + 1.0) / w,
            (2.0 * self.radius + 1.0) / h,
        ])
    }

    fn check_bounds(&self) -> Result<(), ImagingError> {
        let err = || ImagingError::DiscOutOfBounds {
            cx: self.center_x,
            cy: self.center_y,
            radius: self.radius,
            width: self.width,
            height: self.height,
        };
        if self.width == 0 || self.height == 0 {
            return Err(ImagingError::EmptyFrame {
                width: self.width,
                height: self.height,
            });
        }
        let r = self.radius.max(0.0);
        if !(self.center_x.is_finite() && self.center_y.is_finite() && r.is_finite()) {
            return Err(err());
        }
        let max_x = f64::from(self.width - 1);
        let max_y = f64::from(self.height - 1);
        if self.center_x - r < 0.0
            || self.center_y - r < 0.0
            || self.center_x + r > max_x
            || self.center_y + r > max_y
        {
            return Err(err());
        }
        Ok(())
    }
}

/// Renders the `(rgb, lwir)` pair for a scene. Deterministic.
pub fn generate_synthetic_pair(spec: &SceneSpec) -> Result<(Frame, Frame), ImagingError> {
    spec.check_bounds()?;
    let n = spec.width as usize * spec.height as usize * 3;
    let mut rgb = Vec::with_capacity(n);
    let mut lwir = Vec::with_capacity(n);
    let bg = [spec.background; 3];
    let lwir_bg = palettize(spec.lwir_background);
    let lwir_disc = palettize(spec.disc_lwir);
    for y in 0..spec.height {
        for x in 0..spec.width {
            if spec.contains(x, y) {
                rgb.extend_from_slice(&spec.disc_rgb);
                lwir.extend_from_slice(&lwir_disc);
            } else {
                rgb.extend_from_slice(&bg);
                lwir.extend_from_slice(&lwir_bg);
            }
        }
    }
    Ok((
        Frame::new(
            spec.width,
            spec.height,
            Modality::Rgb,
            rgb,
            spec.timestamp_ms,
        )?,
        Frame::new(
            spec.width,
            spec.height,
            Modality::Lwir,
            lwir,
            spec.timestamp_ms,
        )?,
    ))
}
