//! Minimal detector service for exercising the client over real HTTP.
//!
//! Models: `stub` (one fixed box), `empty` (no boxes), `malformed`
//! (confidence 1.3), `slow` (answers after 500 ms), `wrong_id` (echoes a
//! different frame id).

use std::net::SocketAddr;
use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};

pub const MODELS: [&str; 5] = ["stub", "empty", "malformed", "slow", "wrong_id"];
pub const STUB_BOX: [f64; 4] = [0.5, 0.5, 0.25, 0.25];
pub const STUB_CONFIDENCE: f64 = 0.875;

async fn detect(body: String) -> (StatusCode, Json<Value>) {
    let bad = |detail: String| {
        (
            StatusCode::BAD_REQUEST,
            Json(json!({"error": "bad_request", "detail": detail})),
        )
    };
    let req: Value = match serde_json::from_str(&body) {
        Ok(v) => v,
        Err(e) => return bad(e.to_string()),
    };
    let (Some(frame_id), Some(model_id), Some(b64)) = (
        req["frame_id"].as_str(),
        req["model_id"].as_str(),
        req["image_b64"].as_str(),
    ) else {
        return bad("missing field".into());
    };
    if !MODELS.contains(&model_id) {
        return (
            StatusCode::NOT_FOUND,
            Json(json!({"error": "unknown_model", "model_id": model_id})),
        );
    }
    match STANDARD.decode(b64) {
        Ok(bytes) if bytes.starts_with(b"\x89PNG\r\n\x1a\n") => {}
        Ok(_) => return bad("image is not a PNG".into()),
        Err(e) => return bad(format!("image_b64: {e}")),
    }
    let one =
        |confidence: f64| json!([{"class_id": 0, "confidence": confidence, "bbox": STUB_BOX}]);
    let (frame_id, detections) = match model_id {
        "stub" => (frame_id.to_string(), one(STUB_CONFIDENCE)),
        "empty" => (frame_id.to_string(), json!([])),
        "malformed" => (frame_id.to_string(), one(1.3)),
        "slow" => {
            tokio::time::sleep(Duration::from_millis(500)).await;
            (frame_id.to_string(), one(STUB_CONFIDENCE))
        }
        _ => (format!("{frame_id}-other"), one(STUB_CONFIDENCE)),
    };
    (
        StatusCode::OK,
        Json(
            json!({"frame_id": frame_id, "model_id": model_id, "inference_ms": 1.5, "detections": detections}),
        ),
    )
}

/// Serves on an ephemeral port from a background thread; returns the base URL.
pub fn spawn() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind");
    listener.set_nonblocking(true).expect("nonblocking");
    let addr: SocketAddr = listener.local_addr().expect("addr");
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("runtime");
        rt.block_on(async move {
            let app = Router::new()
                .route(
                    "/v1/health",
                    get(|| async { Json(json!({"status": "ok"})) }),
                )
                .route("/v1/models", get(|| async { Json(json!(MODELS)) }))
                .route("/v1/detect", post(detect));
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            axum::serve(listener, app).await.expect("serve");
        });
    });
    format!("http://{addr}")
}
