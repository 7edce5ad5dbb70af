use serde::{Deserialize, Serialize};

use super::{Frame, ImagingError, Modality};

const MIN_DETERMINANT: f64 = 1e-12;

/// Projective map from RGB-grid pixel coordinates to LWIR pixel coordinates.
///
/// This is the backward map used for inverse warping: output pixel `(x, y)`
/// of the registered frame is sampled from the LWIR frame at `H · (x, y, 1)`.
/// Coefficients are normalized so the bottom-right element is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, ImagingError> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ImagingError::HomographyShape(9));
        }
        let d = det3(&m);
        if d.abs() <= MIN_DETERMINANT || m[2][2] == 0.0 {
            return Err(ImagingError::SingularHomography(d));
        }
        let s = m[2][2];
        let mut n = m;
        n.iter_mut().flatten().for_each(|v| *v /= s);
        let d = det3(&n);
        if d.abs() <= MIN_DETERMINANT {
            return Err(ImagingError::SingularHomography(d));
        }
        Ok(Self { m: n })
    }

    /// Nine row-major coefficients, as stored in the config file.
    pub fn from_row_major(values: &[f64]) -> Result<Self, ImagingError> {
        if values.len() != 9 {
            return Err(ImagingError::HomographyShape(values.len()));
        }
        let mut m = [[0.0; 3]; 3];
        for (i, v) in values.iter().enumerate() {
            m[i / 3][i % 3] = *v;
        }
        Self::from_matrix(m)
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, v) in self.m.iter().flatten().enumerate() {
            out[i] = *v;
        }
        out
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.m)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w.abs() < f64::EPSILON {
            return None;
        }
        let u = (m[0][0] * x + m[0][1] * y + m[0][2]) / w;
        let v = (m[1][0] * x + m[1][1] * y + m[1][2]) / w;
        Some((u, v))
    }
}

impl TryFrom<Vec<f64>> for Homography {
    type Error = ImagingError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Homography::from_row_major(&values)
    }
}

impl From<Homography> for Vec<f64> {
    fn from(h: Homography) -> Vec<f64> {
        h.to_row_major().to_vec()
    }
}

impl Default for Homography {
    fn default() -> Self {
        Self::identity()
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Warps an LWIR frame onto a `target_width x target_height` grid.
///
/// Samples are bilinearly interpolated; anything that maps outside the source
/// raster is black.
pub fn register(
    lwir: &Frame,
    h: &Homography,
    target_width: u32,
    target_height: u32,
) -> Result<Frame, ImagingError> {
    if lwir.modality() != Modality::Lwir {
        return Err(ImagingError::WrongModality {
            expected: Modality::Lwir,
            actual: lwir.modality(),
        });
    }
    if target_width == 0 || target_height == 0 {
        return Err(ImagingError::EmptyTarget {
            width: target_width,
            height: target_height,
        });
    }
    let det = h.determinant();
    if !det.is_finite() || det.abs() <= MIN_DETERMINANT {
        return Err(ImagingError::SingularHomography(det));
    }

    let (sw, sh) = lwir.dims();
    let src = lwir.pixels();
    let max_x = f64::from(sw - 1);
    let max_y = f64::from(sh - 1);
    let mut out = vec![0u8; target_width as usize * target_height as usize * 3];

    for y in 0..target_height {
        for x in 0..target_width {
            let Some((sx, sy)) = h.apply(f64::from(x), f64::from(y)) else {
                continue;
            };
            if !(0.0..=max_x).contains(&sx) || !(0.0..=max_y).contains(&sy) {
                continue;
            }
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let x0 = x0 as usize;
            let y0 = y0 as usize;
            let x1 = (x0 + 1).min(sw as usize - 1);
            let y1 = (y0 + 1).min(sh as usize - 1);
            let idx = |xx: usize, yy: usize| (yy * sw as usize + xx) * 3;
            let o = (y as usize * target_width as usize + x as usize) * 3;
            for c in 0..3 {
                let p00 = f64::from(src[idx(x0, y0) + c]);
                let p10 = f64::from(src[idx(x1, y0) + c]);
                let p01 = f64::from(src[idx(x0, y1) + c]);
                let p11 = f64::from(src[idx(x1, y1) + c]);
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                let v = top + (bottom - top) * fy;
                out[o + c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }

    Frame::new(
        target_width,
        target_height,
        Modality::Lwir,
        out,
        lwir.timestamp_ms(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Frame {
        let mut px = Vec::new();
        for y in 0..h {
            for x in 0..w {
                px.extend_from_slice(&[(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8]);
            }
        }
        Frame::new(w, h, Modality::Lwir, px, 5).unwrap()
    }

    #[test]
    fn identity_is_byte_identity() {
        let f = gradient(64, 64);
        let out = register(&f, &Homography::identity(), 64, 64).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn scaled_identity_normalizes_to_identity() {
        let h =
            Homography::from_matrix([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        assert!(h.is_identity());
        let f = gradient(16, 9);
        let out = register(&f, &h, 16, 9).unwrap();
        assert_eq!(out.pixels(), f.pixels());
    }

    #[test]
    fn translation_matches_brute_force_shift() {
        let f = gradient(64, 64);
        let out = register(&f, &Homography::translation(10.0, 0.0), 64, 64).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                let expected = if x + 10 < 64 {
                    f.pixel(x + 10, y)
                } else {
                    [0, 0, 0]
                };
                assert_eq!(out.pixel(x, y), expected, "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn half_pixel_shift_interpolates() {
        let f = Frame::new(2, 1, Modality::Lwir, vec![0, 0, 0, 100, 200, 255], 0).unwrap();
        let out = register(&f, &Homography::translation(0.5, 0.0), 2, 1).unwrap();
        assert_eq!(out.pixel(0, 0), [50, 100, 128]);
        assert_eq!(out.pixel(1, 0), [0, 0, 0]);
    }

    #[test]
    fn singular_homography_is_rejected() {
        let singular = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            Homography::from_matrix(singular),
            Err(ImagingError::SingularHomography(_))
        ));
        assert!(Homography::from_row_major(&[1.0; 8]).is_err());
    }

    #[test]
    fn register_requires_lwir_input() {
        let f = gradient(4, 4).with_modality(Modality::Rgb);
        assert!(register(&f, &Homography::identity(), 4, 4).is_err());
        assert!(register(&gradient(4, 4), &Homography::identity(), 0, 4).is_err());
    }

    #[test]
    fn serde_uses_row_major_list() {
        let h = Homography::translation(3.0, -2.0);
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, "[1.0,0.0,3.0,0.0,1.0,-2.0,0.0,0.0,1.0]");
        let back: Homography = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }
}
