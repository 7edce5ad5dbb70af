use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DetectError, Detection, DetectionResult, DetectorBackend, FrameContext};
use crate::illumination::{categorize, IlluminationCategory};
use crate::imaging::{Frame, FusionLevel};
use crate::registry::{ModelScope, Registry};
use crate::stable_hash::stable_hash;

/// Color label matching any mug color in a [`ConfidenceTable`].
pub const WILDCARD_COLOR: &str = "*";

type TableKey = (FusionLevel, IlluminationCategory, String);

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    fusion_rgb_percent: FusionLevel,
    category: IlluminationCategory,
    color: String,
    confidence: f64,
}

/// Lookup of `(fusion level, category, color) -> confidence` for the mock detector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfidenceTable {
    entries: BTreeMap<TableKey, f64>,
}

impl ConfidenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        level: FusionLevel,
        category: IlluminationCategory,
        color: impl Into<String>,
        confidence: f64,
    ) -> Result<(), DetectError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(DetectError::Fixture(format!(
                "table confidence {confidence} is outside [0, 1]"
            )));
        }
        self.entries.insert(
            (level, category, color.into().to_ascii_lowercase()),
            confidence,
        );
        Ok(())
    }

    pub fn with(
        mut self,
        level: FusionLevel,
        category: IlluminationCategory,
        color: &str,
        confidence: f64,
    ) -> Result<Self, DetectError> {
        self.insert(level, category, color, confidence)?;
        Ok(self)
    }

    /// Exact color first, then the wildcard row.
    pub fn get(
        &self,
        level: FusionLevel,
        category: IlluminationCategory,
        color: Option<&str>,
    ) -> Option<f64> {
        let exact = color.and_then(|c| {
            self.entries
                .get(&(level, category, c.to_ascii_lowercase()))
                .copied()
        });
        exact.or_else(|| {
            self.entries
                .get(&(level, category, WILDCARD_COLOR.to_string()))
                .copied()
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV: `fusion_rgb_percent,category,color,confidence`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DetectError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut table = Self::new();
        for (i, row) in rdr.deserialize::<TableRow>().enumerate() {
            let row = row.map_err(|e| {
                DetectError::Fixture(format!("confidence table row {}: {e}", i + 1))
            })?;
            table.insert(
                row.fusion_rgb_percent,
                row.category,
                row.color,
                row.confidence,
            )?;
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DetectError> {
        let mut w = csv::Writer::from_writer(writer);
        for ((level, category, color), confidence) in &self.entries {
            w.serialize(TableRow {
                fusion_rgb_percent: *level,
                category: *category,
                color: color.clone(),
                confidence: *confidence,
            })
            .map_err(|e| DetectError::Fixture(e.to_string()))?;
        }
        w.flush().map_err(|e| DetectError::Fixture(e.to_string()))
    }
}

/// Deterministic stand-in for trained detectors: echoes the ground-truth
/// boxes with a confidence taken from a lookup table, optionally perturbed by
/// Gaussian noise seeded from `(seed, model_id, frame_id)`.
#[derive(Debug, Clone)]
pub struct MockDetector {
    table: ConfidenceTable,
    models: HashMap<String, ModelScopeLevel>,
    noise_sigma: f64,
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct ModelScopeLevel {
    level: FusionLevel,
    scope: ModelScope,
}

impl MockDetector {
    pub fn new(table: ConfidenceTable, registry: &Registry) -> Self {
        let models = registry
            .records()
            .iter()
            .map(|r| {
                (
                    r.model_id.clone(),
                    ModelScopeLevel {
                        level: r.fusion_level,
                        scope: r.category,
                    },
                )
            })
            .collect();
        Self {
            table,
            models,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma.max(0.0);
        self.seed = seed;
        self
    }

    /// Same as [`DetectorBackend::detect`], without needing `&mut self`.
    pub fn mock_detect(
        &self,
        _frame: &Frame,
        model_id: &str,
        ctx: &FrameContext,
    ) -> Result<DetectionResult, DetectError> {
        let model = self
            .models
            .get(model_id)
            .ok_or_else(|| DetectError::UnknownModel(model_id.to_string()))?;
        let category = match model.scope {
            ModelScope::Category(c) => c,
            ModelScope::BaselineAny => {
                categorize(ctx.lux).map_err(|e| DetectError::Fixture(e.to_string()))?
            }
        };
        let mut result = DetectionResult::empty(&ctx.frame_id, model_id);
        if ctx.truth.is_empty() {
            return Ok(result);
        }
        let base = self
            .table
            .get(model.level, category, ctx.color_label.as_deref())
            .ok_or_else(|| {
                DetectError::Fixture(format!(
                    "no confidence entry for fusion {} / {} / color {:?}",
                    model.level, category, ctx.color_label
                ))
            })?;
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(
            &format!("{model_id}\u{1f}{}", ctx.frame_id),
            self.seed,
        ));
        let noise =
            Normal::new(0.0, self.noise_sigma).map_err(|e| DetectError::Fixture(e.to_string()))?;
        for truth in &ctx.truth {
            let confidence = if self.noise_sigma > 0.0 {
                (base + noise.sample(&mut rng)).clamp(0.0, 1.0)
            } else {
                base
            };
            result.detections.push(Detection {
                class_id: truth.class_id,
                confidence,
                bbox: truth.bbox,
            });
        }
        Ok(result)
    }
}

impl DetectorBackend for MockDetector {
    fn detect(
        &mut self,
        frame: &Frame,
        model_id: &str,
        ctx: &FrameContext,
    ) -> Result<DetectionResult, DetectError> {
        self.mock_detect(frame, model_id, ctx)
    }
}
