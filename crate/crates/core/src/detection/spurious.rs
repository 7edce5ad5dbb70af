use serde::{Deserialize, Serialize};

use super::{BBox, Detection, DetectionResult};

/// Thresholds for discarding frames whose best detection looks like a glitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpuriousPolicy {
    /// Frames whose best confidence is below this are dropped.
    pub confidence_floor: f64,
    /// Normalized center displacement from the last kept box...
    pub max_jump: f64,
    /// ...combined with an IoU below this marks a teleport.
    pub iou_floor: f64,
}

impl Default for SpuriousPolicy {
    fn default() -> Self {
        Self {
            confidence_floor: 0.25,
            max_jump: 0.3,
            iou_floor: 0.05,
        }
    }
}

impl SpuriousPolicy {
    /// A policy that keeps everything.
    pub fn permissive() -> Self {
        Self {
            confidence_floor: 0.0,
            max_jump: f64::INFINITY,
            iou_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionRule {
    ConfidenceFloor,
    ContinuityJump,
}

impl ExclusionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionRule::ConfidenceFloor => "confidence_floor",
            ExclusionRule::ContinuityJump => "continuity_jump",
        }
    }
}

/// Streaming form of the filter; remembers the last retained box.
#[derive(Debug, Clone, Default)]
pub struct SpuriousFilter {
    policy: SpuriousPolicy,
    last: Option<BBox>,
}

impl SpuriousFilter {
    pub fn new(policy: SpuriousPolicy) -> Self {
        Self { policy, last: None }
    }

    /// Judges a frame's best detection. Frames without a detection are never
    /// excluded and leave the continuity reference untouched.
    pub fn check(&mut self, best: Option<&Detection>) -> Option<ExclusionRule> {
        let d = best?;
        if d.confidence < self.policy.confidence_floor {
            return Some(ExclusionRule::ConfidenceFloor);
        }
        if let Some(prev) = &self.last {
            if prev.center_distance(&d.bbox) > self.policy.max_jump
                && prev.iou(&d.bbox) < self.policy.iou_floor
            {
                return Some(ExclusionRule::ContinuityJump);
            }
        }
        self.last = Some(d.bbox);
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    /// Position in the input sequence.
    pub index: usize,
    pub frame_id: String,
    pub rule: ExclusionRule,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub retained: Vec<DetectionResult>,
    pub exclusions: Vec<Exclusion>,
}

/// Drops spurious frames from a time-ordered sequence. The retained list is
/// a subsequence of the input with results left untouched.
pub fn filter_spurious(results: &[DetectionResult], policy: &SpuriousPolicy) -> FilterOutcome {
    let mut filter = SpuriousFilter::new(*policy);
    let mut out = FilterOutcome::default();
    for (index, r) in results.iter().enumerate() {
        let best = r.best();
        match filter.check(best) {
            None => out.retained.push(r.clone()),
            Some(rule) => out.exclusions.push(Exclusion {
                index,
                frame_id: r.frame_id.clone(),
                rule,
                confidence: best.map_or(0.0, |d| d.confidence),
            }),
        }
    }
    out
}
