use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use crate::predictor::{PredictRequest, Predictor};

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

pub fn router(predictor: Arc<Predictor>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/predict", post(predict))
        .with_state(predictor)
}

async fn health(State(p): State<Arc<Predictor>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "models": p.models().len() }))
}

async fn models(State(p): State<Arc<Predictor>>) -> Json<serde_json::Value> {
    Json(json!(p.models()))
}

async fn predict(State(p): State<Arc<Predictor>>, body: Bytes) -> Result<Response, ApiError> {
    let req: PredictRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    let resp = p
        .predict(&req)
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, format!("{e:#}")))?;
    Ok(Json(resp).into_response())
}

pub async fn serve(predictor: Arc<Predictor>, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(predictor))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
