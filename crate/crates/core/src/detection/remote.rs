use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use serde::Serialize;

use super::protocol::{self, DetectRequest, ErrorBody, HealthBody};
use super::{DetectError, DetectionResult, DetectorBackend, FrameContext};
use crate::imaging::{generate_synthetic_pair, Frame, SceneSpec};

pub const DEFAULT_TIMEOUT_MS: u64 = 2000;

/// Client for a detector service speaking the `/v1` JSON protocol.
#[derive(Debug, Clone)]
pub struct RemoteDetector {
    base: String,
    client: Client,
    timeout_ms: u64,
}

impl RemoteDetector {
    pub fn new(endpoint: &str, timeout_ms: u64) -> Result<Self, DetectError> {
        let client = Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| DetectError::Transport(e.to_string()))?;
        Ok(Self {
            base: endpoint.trim_end_matches('/').to_string(),
            client,
            timeout_ms,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn transport(&self, e: reqwest::Error) -> DetectError {
        if e.is_timeout() {
            DetectError::Timeout(self.timeout_ms)
        } else {
            DetectError::Transport(e.to_string())
        }
    }

    /// Sends an already-built request body and returns `(status, body)`.
    pub fn post_raw(&self, body: String) -> Result<(u16, String), DetectError> {
        let resp = self
            .client
            .post(self.url(protocol::DETECT_PATH))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| self.transport(e))?;
        Ok((status, text))
    }

    pub fn get_raw(&self, path: &str) -> Result<(u16, String), DetectError> {
        let resp = self
            .client
            .get(self.url(path))
            .send()
            .map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| self.transport(e))?;
        Ok((status, text))
    }

    pub fn remote_detect(
        &self,
        frame: &Frame,
        model_id: &str,
        frame_id: &str,
        lux: f64,
    ) -> Result<DetectionResult, DetectError> {
        let req = DetectRequest::from_frame(frame, frame_id, model_id, lux)?;
        let (status, body) = self.post_raw(protocol::encode_request(&req))?;
        if status != 200 {
            return Err(protocol::parse_error(status, &body));
        }
        protocol::parse_response(&body, Some((frame_id, model_id)))
    }

    pub fn health(&self) -> Result<HealthBody, DetectError> {
        let (status, body) = self.get_raw(protocol::HEALTH_PATH)?;
        if status != 200 {
            return Err(protocol::parse_error(status, &body));
        }
        serde_json::from_str(&body).map_err(|e| DetectError::Malformed(e.to_string()))
    }

    pub fn models(&self) -> Result<Vec<String>, DetectError> {
        let (status, body) = self.get_raw(protocol::MODELS_PATH)?;
        if status != 200 {
            return Err(protocol::parse_error(status, &body));
        }
        serde_json::from_str(&body).map_err(|e| DetectError::Malformed(e.to_string()))
    }
}

impl DetectorBackend for RemoteDetector {
    fn detect(
        &mut self,
        frame: &Frame,
        model_id: &str,
        ctx: &FrameContext,
    ) -> Result<DetectionResult, DetectError> {
        self.remote_detect(frame, model_id, &ctx.frame_id, ctx.lux)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub endpoint: String,
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    fn record(&mut self, name: &str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(ConformanceCheck {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

const PROBE_UNKNOWN_MODEL: &str = "__protocol_check_unknown_model__";
const PROBE_FRAME_ID: &str = "protocol-check-0001";

/// Probes a live service for conformance with the wire protocol.
///
/// Returns `Err` only when the service cannot be reached at all; every
/// contract deviation is reported as a failed check.
pub fn protocol_check(endpoint: &str, timeout_ms: u64) -> Result<ConformanceReport, DetectError> {
    let client = RemoteDetector::new(endpoint, timeout_ms)?;
    let mut report = ConformanceReport {
        endpoint: client.endpoint().to_string(),
        checks: Vec::new(),
    };

    let (status, body) = client.get_raw(protocol::HEALTH_PATH)?;
    report.record(
        "health",
        match serde_json::from_str::<serde_json::Value>(&body) {
            Ok(v) if status == 200 && v == serde_json::json!({"status": "ok"}) => Ok("ok".into()),
            _ => Err(format!("status {status}, body {body}")),
        },
    );

    let models = match client.get_raw(protocol::MODELS_PATH) {
        Ok((200, body)) => {
            serde_json::from_str::<Vec<String>>(&body).map_err(|e| format!("{e}: {body}"))
        }
        Ok((status, body)) => Err(format!("status {status}, body {body}")),
        Err(e) => Err(e.to_string()),
    };
    report.record(
        "models",
        models
            .as_ref()
            .map(|m| format!("{} models", m.len()))
            .map_err(Clone::clone),
    );

    let (_, lwir) = generate_synthetic_pair(&SceneSpec::default()).expect("default scene is valid");
    let probe = lwir.with_modality(crate::imaging::Modality::Fused);

    let unknown = DetectRequest::from_frame(&probe, PROBE_FRAME_ID, PROBE_UNKNOWN_MODEL, 100.0)?;
    let (status, body) = client.post_raw(protocol::encode_request(&unknown))?;
    report.record(
        "unknown_model",
        match serde_json::from_str::<ErrorBody>(&body) {
            Ok(e) if status == 404 && e == ErrorBody::unknown_model(PROBE_UNKNOWN_MODEL) => {
                Ok("404".into())
            }
            _ => Err(format!("status {status}, body {body}")),
        },
    );

    let target_model = models.as_ref().ok().and_then(|m| {
        m.iter()
            .find(|id| id.as_str() == "stub")
            .or_else(|| m.first())
            .cloned()
    });

    let mut bad_image = DetectRequest::from_frame(
        &probe,
        PROBE_FRAME_ID,
        target_model.as_deref().unwrap_or("stub"),
        100.0,
    )?;
    bad_image.image_b64 = "not base64 at all!".into();
    let (status, body) = client.post_raw(protocol::encode_request(&bad_image))?;
    report.record(
        "bad_request",
        match serde_json::from_str::<ErrorBody>(&body) {
            Ok(e) if status == 400 && e.error == protocol::ERROR_BAD_REQUEST => Ok("400".into()),
            _ => Err(format!("status {status}, body {body}")),
        },
    );

    let Some(model_id) = target_model else {
        report.record("detect", Err("service lists no models".into()));
        return Ok(report);
    };
    let first = client.remote_detect(&probe, &model_id, PROBE_FRAME_ID, 100.0);
    report.record(
        "detect",
        first
            .as_ref()
            .map(|r| format!("{model_id}: {} detections", r.detections.len()))
            .map_err(|e| e.to_string()),
    );
    if let Ok(first) = first {
        let started = Instant::now();
        let second = client.remote_detect(&probe, &model_id, PROBE_FRAME_ID, 100.0);
        report.record(
            "deterministic",
            match second {
                Ok(second) if second.detections == first.detections => Ok(format!(
                    "repeat matched in {} ms",
                    started.elapsed().as_millis()
                )),
                Ok(_) => Err("repeated request returned different detections".into()),
                Err(e) => Err(e.to_string()),
            },
        );
    }
    Ok(report)
}
