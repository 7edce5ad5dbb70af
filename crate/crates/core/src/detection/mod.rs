//! Detection data model, detector backends and the spurious-detection filter.

mod log;
mod mock;
pub mod protocol;
mod remote;
mod spurious;

use serde::{Deserialize, Serialize};

use crate::imaging::{Frame, ImagingError};

pub use log::{read_detection_log, write_detection_log, DetectionLogRow};
pub use mock::{ConfidenceTable, MockDetector, WILDCARD_COLOR};
pub use remote::{
    protocol_check, ConformanceCheck, ConformanceReport, RemoteDetector, DEFAULT_TIMEOUT_MS,
};
pub use spurious::{
    filter_spurious, Exclusion, ExclusionRule, FilterOutcome, SpuriousFilter, SpuriousPolicy,
};

/// Class id of the only trained class, "mug".
pub const MUG_CLASS_ID: u32 = 0;

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("server does not know model {0:?}")]
    UnknownModel(String),
    #[error("server rejected request: {0}")]
    BadRequest(String),
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Axis-aligned box in normalized `(cx, cy, w, h)` form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// All four values in `[0, 1]` and a non-empty overlap with the unit square.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, String> {
        let b = Self { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("cx", self.cx),
            ("cy", self.cy),
            ("w", self.w),
            ("h", self.h),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        let [x0, y0, x1, y1] = self.clamped_corners();
        if !(x1 > x0 && y1 > y0) {
            return Err(format!("box {self:?} has no area inside the frame"));
        }
        Ok(())
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self, String> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    /// `[x0, y0, x1, y1]` clipped to the unit square.
    pub fn clamped_corners(&self) -> [f64; 4] {
        [
            (self.cx - self.w / 2.0).clamp(0.0, 1.0),
            (self.cy - self.h / 2.0).clamp(0.0, 1.0),
            (self.cx + self.w / 2.0).clamp(0.0, 1.0),
            (self.cy + self.h / 2.0).clamp(0.0, 1.0),
        ]
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let [ax0, ay0, ax1, ay1] = self.clamped_corners();
        let [bx0, by0, bx1, by1] = other.clamped_corners();
        let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        let inter = iw * ih;
        let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn center_distance(&self, other: &BBox) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }
}

/// A labelled box, as found in annotation files and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_id: u32,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} is outside [0, 1]", self.confidence));
        }
        self.bbox.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub frame_id: String,
    pub model_id: String,
    pub detections: Vec<Detection>,
    pub inference_latency_ms: f64,
}

impl DetectionResult {
    pub fn empty(frame_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            frame_id: frame_id.into(),
            model_id: model_id.into(),
            detections: Vec::new(),
            inference_latency_ms: 0.0,
        }
    }

    /// Highest-confidence detection; the first one wins ties.
    pub fn best(&self) -> Option<&Detection> {
        self.detections
            .iter()
            .fold(None, |best: Option<&Detection>, d| match best {
                Some(b) if b.confidence >= d.confidence => Some(b),
                _ => Some(d),
            })
    }
}

/// Per-frame information that travels alongside the pixels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameContext {
    pub frame_id: String,
    pub timestamp_ms: i64,
    pub lux: f64,
    pub color_label: Option<String>,
    /// Ground truth; only the mock backend looks at it.
    pub truth: Vec<Annotation>,
}

/// Anything that maps a fused frame to detections for a given model.
///
/// Callers keep at most one request in flight per backend instance.
pub trait DetectorBackend {
    fn detect(
        &mut self,
        frame: &Frame,
        model_id: &str,
        ctx: &FrameContext,
    ) -> Result<DetectionResult, DetectError>;
}

impl<T: DetectorBackend + ?Sized> DetectorBackend for Box<T> {
    fn detect(
        &mut self,
        frame: &Frame,
        model_id: &str,
        ctx: &FrameContext,
    ) -> Result<DetectionResult, DetectError> {
        (**self).detect(frame, model_id, ctx)
    }
}
