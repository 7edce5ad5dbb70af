//! JSON wire format spoken with the remote detector service.
//!
//! ```text
//! POST /v1/detect   {"frame_id", "model_id", "lux", "width", "height", "image_b64"}
//!   200             {"frame_id", "model_id", "inference_ms", "detections": [{"class_id", "confidence", "bbox": [cx, cy, w, h]}]}
//!   404             {"error": "unknown_model", "model_id": ...}
//!   400             {"error": "bad_request", "detail": ...}
//! GET  /v1/models   ["model_id", ...]
//! GET  /v1/health   {"status": "ok"}
//! ```
//!
//! `image_b64` is standard base64 of a PNG. Numbers are written in their
//! shortest round-trip decimal form, which never loses precision.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{BBox, DetectError, Detection, DetectionResult};
use crate::imaging::{Frame, Modality};

pub const DETECT_PATH: &str = "/v1/detect";
pub const MODELS_PATH: &str = "/v1/models";
pub const HEALTH_PATH: &str = "/v1/health";

pub const ERROR_UNKNOWN_MODEL: &str = "unknown_model";
pub const ERROR_BAD_REQUEST: &str = "bad_request";
pub const ERROR_INFERENCE_FAILED: &str = "inference_failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub frame_id: String,
    pub model_id: String,
    pub lux: f64,
    pub width: u32,
    pub height: u32,
    pub image_b64: String,
}

impl DetectRequest {
    pub fn from_frame(
        frame: &Frame,
        frame_id: &str,
        model_id: &str,
        lux: f64,
    ) -> Result<Self, DetectError> {
        Ok(Self {
            frame_id: frame_id.to_string(),
            model_id: model_id.to_string(),
            lux,
            width: frame.width(),
            height: frame.height(),
            image_b64: STANDARD.encode(frame.encode_png()?),
        })
    }

    /// Decodes the embedded image and checks it against the declared size.
    pub fn decode_frame(&self) -> Result<Frame, DetectError> {
        let bytes = STANDARD
            .decode(self.image_b64.as_bytes())
            .map_err(|e| DetectError::BadRequest(format!("image_b64: {e}")))?;
        let frame = Frame::decode_png(&bytes, Modality::Fused, 0)
            .map_err(|e| DetectError::BadRequest(e.to_string()))?;
        if frame.dims() != (self.width, self.height) {
            return Err(DetectError::BadRequest(format!(
                "declared {}x{} but image is {}x{}",
                self.width,
                self.height,
                frame.width(),
                frame.height()
            )));
        }
        Ok(frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireDetection {
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub frame_id: String,
    pub model_id: String,
    pub inference_ms: f64,
    pub detections: Vec<WireDetection>,
}

impl DetectResponse {
    pub fn from_result(result: &DetectionResult) -> Self {
        Self {
            frame_id: result.frame_id.clone(),
            model_id: result.model_id.clone(),
            inference_ms: result.inference_latency_ms,
            detections: result
                .detections
                .iter()
                .map(|d| WireDetection {
                    class_id: d.class_id,
                    confidence: d.confidence,
                    bbox: d.bbox.to_array(),
                })
                .collect(),
        }
    }

    /// Validates every field and converts to the domain type.
    pub fn into_result(self) -> Result<DetectionResult, DetectError> {
        if !(self.inference_ms >= 0.0) || !self.inference_ms.is_finite() {
            return Err(DetectError::Malformed(format!(
                "inference_ms {} must be a non-negative number",
                self.inference_ms
            )));
        }
        let detections = self
            .detections
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                let bbox = BBox {
                    cx: w.bbox[0],
                    cy: w.bbox[1],
                    w: w.bbox[2],
                    h: w.bbox[3],
                };
                let d = Detection {
                    class_id: w.class_id,
                    confidence: w.confidence,
                    bbox,
                };
                d.validate()
                    .map_err(|e| DetectError::Malformed(format!("detections[{i}]: {e}")))?;
                Ok(d)
            })
            .collect::<Result<Vec<_>, DetectError>>()?;
        Ok(DetectionResult {
            frame_id: self.frame_id,
            model_id: self.model_id,
            detections,
            inference_latency_ms: self.inference_ms,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ErrorBody {
    pub fn unknown_model(model_id: &str) -> Self {
        Self {
            error: ERROR_UNKNOWN_MODEL.into(),
            model_id: Some(model_id.into()),
            detail: None,
        }
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self {
            error: ERROR_BAD_REQUEST.into(),
            model_id: None,
            detail: Some(detail.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthBody {
    pub status: String,
}

pub fn encode_request(req: &DetectRequest) -> String {
    serde_json::to_string(req).expect("request serializes")
}

pub fn encode_response(resp: &DetectResponse) -> String {
    serde_json::to_string(resp).expect("response serializes")
}

pub fn parse_request(body: &str) -> Result<DetectRequest, DetectError> {
    serde_json::from_str(body).map_err(|e| DetectError::BadRequest(e.to_string()))
}

/// Parses a 200 body. When `expect` is given, the echoed ids must match.
pub fn parse_response(
    body: &str,
    expect: Option<(&str, &str)>,
) -> Result<DetectionResult, DetectError> {
    let resp: DetectResponse =
        serde_json::from_str(body).map_err(|e| DetectError::Malformed(e.to_string()))?;
    if let Some((frame_id, model_id)) = expect {
        if resp.frame_id != frame_id || resp.model_id != model_id {
            return Err(DetectError::Malformed(format!(
                "response is for ({}, {}), request was ({frame_id}, {model_id})",
                resp.frame_id, resp.model_id
            )));
        }
    }
    resp.into_result()
}

/// Maps a non-200 response onto the typed error it signals.
pub fn parse_error(status: u16, body: &str) -> DetectError {
    let parsed: Option<ErrorBody> = serde_json::from_str(body).ok();
    match (status, parsed) {
        (404, Some(e)) if e.error == ERROR_UNKNOWN_MODEL => {
            DetectError::UnknownModel(e.model_id.unwrap_or_default())
        }
        (400, Some(e)) if e.error == ERROR_BAD_REQUEST => {
            DetectError::BadRequest(e.detail.unwrap_or_default())
        }
        _ => DetectError::Server {
            status,
            body: body.to_string(),
        },
    }
}
