//! Read-only HTTP API over a loaded [`Index`].
//!
//! | endpoint | body |
//! |---|---|
//! | `GET /health` | `{"status":"ok","tokens":N}` |
//! | `GET /tokens?offset=&limit=` | `{"offset","limit","total","tokens":[{id,name,image_url,total_rarity}]}` |
//! | `GET /recommendations/{contract}/{token_id}?model=&k=` | recommendation JSON, same bytes as `recsys recommend` |
//! | `GET /evaluation/{contract}/{token_id}?k=` | evaluation frame JSON |
//!
//! Every non-2xx response has the body `{"error":{"code":..,"message":..}}`.
//! Handlers only delegate to the library; the index is shared immutably
//! between concurrent requests.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::evaluate::{cross_evaluate, to_json};
use crate::index::Index;
use crate::model::TokenRef;
use crate::recommend::{recommend, render_json, ModelSelection, DEFAULT_K};

pub const MAX_K: usize = 100;
pub const MAX_PAGE: usize = 200;
pub const DEFAULT_PAGE: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_param(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_parameter", message)
    }

    fn token_not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "token_not_found", format!("token {what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn params(q: Params) -> Result<HashMap<String, String>, ApiError> {
    q.map(|Query(m)| m).map_err(|e| ApiError::bad_param(e.body_text()))
}

fn usize_param(p: &HashMap<String, String>, key: &str, default: usize, range: std::ops::RangeInclusive<usize>) -> Result<usize, ApiError> {
    let Some(raw) = p.get(key) else {
        return Ok(default);
    };
    raw.parse::<usize>()
        .ok()
        .filter(|v| range.contains(v))
        .ok_or_else(|| {
            ApiError::bad_param(format!(
                "{key} must be an integer in {}..={}, got {raw:?}",
                range.start(),
                range.end()
            ))
        })
}

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn lookup(index: &Index, contract: &str, token_id: &str) -> Result<TokenRef, ApiError> {
    let r = TokenRef::new(contract, token_id).map_err(|_| ApiError::token_not_found(format!("{contract}-{token_id}")))?;
    match index.row_of(&r) {
        Some(_) => Ok(r),
        None => Err(ApiError::token_not_found(&r)),
    }
}

async fn health(State(index): State<Arc<Index>>) -> Response {
    Json(serde_json::json!({"status": "ok", "tokens": index.len()})).into_response()
}

#[derive(Serialize)]
struct TokenSummary<'a> {
    id: &'a TokenRef,
    name: Option<&'a str>,
    image_url: Option<&'a str>,
    total_rarity: f64,
}

#[derive(Serialize)]
struct TokenPage<'a> {
    offset: usize,
    limit: usize,
    total: usize,
    tokens: Vec<TokenSummary<'a>>,
}

async fn tokens(State(index): State<Arc<Index>>, q: Params) -> Result<Response, ApiError> {
    let p = params(q)?;
    let offset = usize_param(&p, "offset", 0, 0..=usize::MAX)?;
    let limit = usize_param(&p, "limit", DEFAULT_PAGE, 1..=MAX_PAGE)?;
    let page = TokenPage {
        offset,
        limit,
        total: index.len(),
        tokens: index
            .tokens()
            .iter()
            .enumerate()
            .skip(offset)
            .take(limit)
            .map(|(row, t)| TokenSummary {
                id: &t.id,
                name: t.name.as_deref(),
                image_url: t.image_url.as_deref(),
                total_rarity: index.total_rarity(row),
            })
            .collect(),
    };
    Ok(Json(page).into_response())
}

async fn recommendations(
    State(index): State<Arc<Index>>,
    Path((contract, token_id)): Path<(String, String)>,
    q: Params,
) -> Result<Response, ApiError> {
    let p = params(q)?;
    let model = match p.get("model") {
        None => ModelSelection::Both,
        Some(m) => m.parse().map_err(ApiError::bad_param)?,
    };
    let k = usize_param(&p, "k", DEFAULT_K, 0..=MAX_K)?;
    let r = lookup(&index, &contract, &token_id)?;
    let lists = recommend(&r, model, k, &index).map_err(|_| ApiError::token_not_found(&r))?;
    Ok(json_body(render_json(&lists)))
}

async fn evaluation(
    State(index): State<Arc<Index>>,
    Path((contract, token_id)): Path<(String, String)>,
    q: Params,
) -> Result<Response, ApiError> {
    let p = params(q)?;
    let k = usize_param(&p, "k", DEFAULT_K, 0..=MAX_K)?;
    let r = lookup(&index, &contract, &token_id)?;
    let frame = cross_evaluate(&r, k, &index).map_err(|_| ApiError::token_not_found(&r))?;
    Ok(json_body(to_json(&frame)))
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "only GET is supported")
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// Builds the API router. With `static_dir`, unmatched paths are served
/// from that directory instead of returning a JSON 404.
pub fn router(index: Arc<Index>, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/health", get(health).fallback(method_not_allowed))
        .route("/tokens", get(tokens).fallback(method_not_allowed))
        .route(
            "/recommendations/{contract}/{token_id}",
            get(recommendations).fallback(method_not_allowed),
        )
        .route(
            "/evaluation/{contract}/{token_id}",
            get(evaluation).fallback(method_not_allowed),
        );
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(not_found),
    };
    app.layer(CorsLayer::permissive()).with_state(index)
}

/// Serves until Ctrl-C.
pub async fn serve(index: Arc<Index>, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(index, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
