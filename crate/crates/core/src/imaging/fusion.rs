use super::{Frame, FusionLevel, ImagingError, Modality};

/// Blends one channel: `round(a * rgb + (1 - a) * lwir)` with `a = rgb_percent / 100`.
///
/// Evaluated in integer hundredths, so the only rounding is the final
/// half-away-from-zero step (all operands are non-negative, hence `+ 50`).
#[inline]
pub fn blend_channel(rgb: u8, lwir: u8, level: FusionLevel) -> u8 {
    let p = u32::from(level.rgb_percent());
    let num = p * u32::from(rgb) + (100 - p) * u32::from(lwir);
    ((num + 50) / 100).min(255) as u8
}

/// Pixel-level fusion of a registered RGB/LWIR pair.
///
/// The output carries the RGB frame's timestamp.
pub fn blend(rgb: &Frame, lwir: &Frame, level: FusionLevel) -> Result<Frame, ImagingError> {
    if rgb.modality() != Modality::Rgb {
        return Err(ImagingError::WrongModality {
            expected: Modality::Rgb,
            actual: rgb.modality(),
        });
    }
    if lwir.modality() != Modality::Lwir {
        return Err(ImagingError::WrongModality {
            expected: Modality::Lwir,
            actual: lwir.modality(),
        });
    }
    if rgb.dims() != lwir.dims() {
        return Err(ImagingError::ShapeMismatch {
            rgb: rgb.dims(),
            lwir: lwir.dims(),
        });
    }
    let pixels = rgb
        .pixels()
        .iter()
        .zip(lwir.pixels())
        .map(|(&a, &b)| blend_channel(a, b, level))
        .collect();
    Frame::new(
        rgb.width(),
        rgb.height(),
        Modality::Fused,
        pixels,
        rgb.timestamp_ms(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn level(p: u8) -> FusionLevel {
        FusionLevel::new(p).unwrap()
    }

    /// Real-valued blend, rounded half away from zero.
    fn oracle(rgb: u8, lwir: u8, level: FusionLevel) -> f64 {
        let a = level.alpha();
        a * f64::from(rgb) + (1.0 - a) * f64::from(lwir)
    }

    #[test]
    fn worked_examples() {
        assert_eq!(blend_channel(200, 100, level(50)), 150);
        // 0.3 * 100 + 0.7 * 77 = 83.9
        assert_eq!(blend_channel(100, 77, level(30)), 84);
        assert_eq!(blend_channel(9, 0, level(50)), 5);
        assert_eq!(blend_channel(255, 255, level(70)), 255);
    }

    #[test]
    fn endpoints_are_identities() {
        let rgb = Frame::new(2, 1, Modality::Rgb, vec![1, 2, 3, 250, 251, 252], 7).unwrap();
        let lwir = Frame::new(2, 1, Modality::Lwir, vec![9, 8, 7, 6, 5, 4], 3).unwrap();
        let f100 = blend(&rgb, &lwir, FusionLevel::RGB_ONLY).unwrap();
        assert_eq!(f100.pixels(), rgb.pixels());
        assert_eq!(f100.modality(), Modality::Fused);
        assert_eq!(f100.timestamp_ms(), 7);
        let f0 = blend(&rgb, &lwir, FusionLevel::LWIR_ONLY).unwrap();
        assert_eq!(f0.pixels(), lwir.pixels());
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let rgb = Frame::filled(4, 3, Modality::Rgb, [0; 3], 0).unwrap();
        let lwir = Frame::filled(3, 4, Modality::Lwir, [0; 3], 0).unwrap();
        let msg = blend(&rgb, &lwir, level(50)).unwrap_err().to_string();
        assert!(msg.contains("(4, 3)") && msg.contains("(3, 4)"), "{msg}");
    }

    #[test]
    fn modality_is_checked() {
        let a = Frame::filled(2, 2, Modality::Rgb, [0; 3], 0).unwrap();
        assert!(matches!(
            blend(&a, &a, level(50)),
            Err(ImagingError::WrongModality { .. })
        ));
    }

    proptest! {
        #[test]
        fn stays_within_half_of_real_blend(p in 0u8..=10, rgb: u8, lwir: u8) {
            let lv = level(p * 10);
            let got = f64::from(blend_channel(rgb, lwir, lv));
            let exact = oracle(rgb, lwir, lv);
            prop_assert!((got - exact).abs() <= 0.5 + 1e-9);
            let lo = rgb.min(lwir) as f64 - 1.0;
            let hi = rgb.max(lwir) as f64 + 1.0;
            prop_assert!(got >= lo && got <= hi);
        }

        #[test]
        fn monotone_in_rgb_weight(rgb: u8, lwir: u8, p in 0u8..10) {
            let (hi, lo) = if rgb >= lwir { (rgb, lwir) } else { (lwir, rgb) };
            let a = blend_channel(hi, lo, level(p * 10));
            let b = blend_channel(hi, lo, level(p * 10 + 10));
            prop_assert!(b >= a);
        }
    }
}
