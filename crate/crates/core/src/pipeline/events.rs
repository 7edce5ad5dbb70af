use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::detection::{write_detection_log, DetectionLogRow};
use crate::illumination::IlluminationCategory;
use crate::turret::{write_command_trace, CommandTraceRow, TurretState};

pub const DETECTION_LOG_HEADER: &str =
    "frame_id,timestamp_ms,model_id,class_id,confidence,cx,cy,w,h,excluded,exclusion_rule";

/// One line of the NDJSON run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event_type", rename_all = "snake_case")]
pub enum RunEvent {
    Frame {
        frame_id: String,
        timestamp_ms: i64,
        lux: f64,
        category: IlluminationCategory,
        model_id: String,
        fusion_rgb_percent: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fuse_ms: Option<f64>,
    },
    Detection {
        frame_id: String,
        timestamp_ms: i64,
        model_id: String,
        detections: usize,
        confidence: Option<f64>,
        excluded: bool,
        exclusion_rule: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detect_ms: Option<f64>,
    },
    Switch {
        frame_id: String,
        timestamp_ms: i64,
        from: Option<IlluminationCategory>,
        to: IlluminationCategory,
        model_id: String,
        fusion_rgb_percent: u8,
    },
    Command {
        frame_id: String,
        timestamp_ms: i64,
        cycle: u64,
        dx_px: f64,
        dy_px: f64,
        pan_steps: i64,
        tilt_steps: i64,
    },
    Drop {
        frame_id: String,
        timestamp_ms: i64,
        stage: String,
    },
    Error {
        frame_id: Option<String>,
        timestamp_ms: Option<i64>,
        stage: String,
        message: String,
    },
}

impl RunEvent {
    pub fn event_type(&self) -> &'static str {
        match self {
            RunEvent::Frame { .. } => "frame",
            RunEvent::Detection { .. } => "detection",
            RunEvent::Switch { .. } => "switch",
            RunEvent::Command { .. } => "command",
            RunEvent::Drop { .. } => "drop",
            RunEvent::Error { .. } => "error",
        }
    }
}

/// Everything a trial produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialLog {
    pub detections: Vec<DetectionLogRow>,
    pub commands: Vec<CommandTraceRow>,
    pub events: Vec<RunEvent>,
    pub turret: TurretState,
}

impl TrialLog {
    /// Mean confidence over detected, non-excluded frames.
    pub fn trial_mean(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .detections
            .iter()
            .filter_map(DetectionLogRow::counted_confidence)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Model ids in the order they served frames, consecutive repeats collapsed.
    pub fn models_used(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.detections {
            if out.last() != Some(&r.model_id) {
                out.push(r.model_id.clone());
            }
        }
        out
    }

    pub fn count(&self, event_type: &str) -> usize {
        self.events
            .iter()
            .filter(|e| e.event_type() == event_type)
            .count()
    }

    pub fn detections_csv(&self) -> Result<Vec<u8>, PipelineError> {
        let mut buf = Vec::new();
        if self.detections.is_empty() {
            writeln!(buf, "{DETECTION_LOG_HEADER}").expect("vec write");
        } else {
            write_detection_log(&self.detections, &mut buf)
                .map_err(|e| PipelineError::Log(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn commands_csv(&self) -> Result<Vec<u8>, PipelineError> {
        let mut buf = Vec::new();
        write_command_trace(&mut buf, &self.commands)?;
        Ok(buf)
    }

    pub fn events_ndjson(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        for e in &self.events {
            serde_json::to_writer(&mut buf, e).expect("event serializes");
            buf.push(b'\n');
        }
        buf
    }

    /// Writes `detections.csv`, `commands.csv` and `events.ndjson`.
    pub fn write(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
        for (name, bytes) in [
            ("detections.csv", self.detections_csv()?),
            ("commands.csv", self.commands_csv()?),
            ("events.ndjson", self.events_ndjson()),
        ] {
            let p = out_dir.join(name);
            std::fs::write(&p, bytes).map_err(io(&p))?;
        }
        Ok(())
    }
}
