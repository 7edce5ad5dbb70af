use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataset::PairedSample;
use crate::detection::{Annotation, BBox, MUG_CLASS_ID};
use crate::imaging::{generate_synthetic_pair, Frame, Modality, SceneSpec};

/// One time-aligned capture: the raw pair, the lux reading taken alongside
/// it, and optional ground truth for the mock backend.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFrame {
    pub frame_id: String,
    pub timestamp_ms: i64,
    pub lux: f64,
    pub color_label: Option<String>,
    pub rgb: Frame,
    pub lwir: Frame,
    pub truth: Vec<Annotation>,
}

/// Time-ordered stream of captures. Any iterator of results qualifies.
pub trait FrameSource: Iterator<Item = Result<SourceFrame, PipelineError>> {}

impl<T: Iterator<Item = Result<SourceFrame, PipelineError>>> FrameSource for T {}

/// Replays ingested dataset samples in timestamp order, decoding lazily.
pub struct ReplaySource {
    samples: std::vec::IntoIter<PairedSample>,
}

impl ReplaySource {
    pub fn new(mut samples: Vec<PairedSample>) -> Self {
        samples.sort_by(|a, b| (a.timestamp_ms, &a.sample_id).cmp(&(b.timestamp_ms, &b.sample_id)));
        Self {
            samples: samples.into_iter(),
        }
    }
}

impl Iterator for ReplaySource {
    type Item = Result<SourceFrame, PipelineError>;

    fn next(&mut self) -> Option<Self::Item> {
        let s = self.samples.next()?;
        let load = || -> Result<SourceFrame, PipelineError> {
            Ok(SourceFrame {
                rgb: Frame::read_png(&s.rgb_path, Modality::Rgb, s.timestamp_ms)?,
                lwir: Frame::read_png(&s.lwir_path, Modality::Lwir, s.timestamp_ms)?,
                frame_id: s.sample_id.clone(),
                timestamp_ms: s.timestamp_ms,
                lux: s.lux,
                color_label: (!s.color_label.is_empty()).then(|| s.color_label.clone()),
                truth: s.annotations.clone(),
            })
        };
        Some(load().map_err(|e| match e {
            PipelineError::Imaging(err) => PipelineError::Source {
                frame_id: s.sample_id.clone(),
                message: err.to_string(),
            },
            other => other,
        }))
    }
}

/// A lux level that holds from `start_ms` until the next step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuxStep {
    pub start_ms: i64,
    pub lux: f64,
}

/// A disc moving in a straight line across a synthetic scene while the lux
/// follows a step schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrial {
    pub scene: SceneSpec,
    pub frames: usize,
    pub interval_ms: i64,
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub lux_schedule: Vec<LuxStep>,
    pub color_label: Option<String>,
}

impl SyntheticTrial {
    /// Ten seconds at 10 fps, stationary disc, constant lux.
    pub fn constant(lux: f64) -> Self {
        let scene = SceneSpec::default();
        let c = (scene.center_x, scene.center_y);
        Self {
            scene,
            frames: 100,
            interval_ms: 100,
            start: c,
            end: c,
            lux_schedule: vec![LuxStep { start_ms: 0, lux }],
            color_label: None,
        }
    }

    /// Splits the trial into equal consecutive segments, one per lux value.
    pub fn with_lux_segments(mut self, levels: &[f64]) -> Self {
        let total = self.frames as i64 * self.interval_ms;
        let n = levels.len().max(1) as i64;
        self.lux_schedule = levels
            .iter()
            .enumerate()
            .map(|(i, &lux)| LuxStep {
                start_ms: total * i as i64 / n,
                lux,
            })
            .collect();
        self
    }

    pub fn lux_at(&self, t_ms: i64) -> f64 {
        self.lux_schedule
            .iter()
            .take_while(|s| s.start_ms <= t_ms)
            .last()
            .or(self.lux_schedule.first())
            .map(|s| s.lux)
            .unwrap_or(0.0)
    }

    pub fn frame(&self, i: usize) -> Result<SourceFrame, PipelineError> {
        let t = i as i64 * self.interval_ms;
        let f = if self.frames > 1 {
            i as f64 / (self.frames - 1) as f64
        } else {
            0.0
        };
        let scene = SceneSpec {
            center_x: self.start.0 + (self.end.0 - self.start.0) * f,
            center_y: self.start.1 + (self.end.1 - self.start.1) * f,
            timestamp_ms: t,
            ..self.scene.clone()
        };
        let (rgb, lwir) = generate_synthetic_pair(&scene)?;
        let truth = match scene.truth_bbox() {
            Some(b) => vec![Annotation {
                class_id: MUG_CLASS_ID,
                bbox: BBox::from_array(b).map_err(|message| PipelineError::Source {
                    frame_id: format!("synthetic_{i:05}"),
                    message,
                })?,
            }],
            None => Vec::new(),
        };
        Ok(SourceFrame {
            frame_id: format!("synthetic_{i:05}"),
            timestamp_ms: t,
            lux: self.lux_at(t),
            color_label: self.color_label.clone(),
            rgb,
            lwir,
            truth,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<SourceFrame, PipelineError>> + '_ {
        (0..self.frames).map(move |i| self.frame(i))
    }
}
