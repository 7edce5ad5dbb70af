use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DetectionResult, ExclusionRule};

/// One row per processed frame; detection columns are empty when the frame
/// produced nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionLogRow {
    pub frame_id: String,
    pub timestamp_ms: i64,
    pub model_id: String,
    pub class_id: Option<u32>,
    pub confidence: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub w: Option<f64>,
    pub h: Option<f64>,
    pub excluded: bool,
    pub exclusion_rule: Option<String>,
}

impl DetectionLogRow {
    /// Logs the best detection of `result`.
    pub fn from_result(
        result: &DetectionResult,
        timestamp_ms: i64,
        exclusion: Option<ExclusionRule>,
    ) -> Self {
        let best = result.best();
        Self {
            frame_id: result.frame_id.clone(),
            timestamp_ms,
            model_id: result.model_id.clone(),
            class_id: best.map(|d| d.class_id),
            confidence: best.map(|d| d.confidence),
            cx: best.map(|d| d.bbox.cx),
            cy: best.map(|d| d.bbox.cy),
            w: best.map(|d| d.bbox.w),
            h: best.map(|d| d.bbox.h),
            excluded: exclusion.is_some(),
            exclusion_rule: exclusion.map(|r| r.as_str().to_string()),
        }
    }

    /// Confidence that counts toward trial statistics.
    pub fn counted_confidence(&self) -> Option<f64> {
        if self.excluded {
            None
        } else {
            self.confidence
        }
    }
}

pub fn write_detection_log<W: Write>(
    rows: &[DetectionLogRow],
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_detection_log<R: Read>(reader: R) -> Result<Vec<DetectionLogRow>, csv::Error> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .collect()
}
