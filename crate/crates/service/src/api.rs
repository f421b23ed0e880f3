//! HTTP routes under `/api/v1`.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Serialize;
use termrec_core::wire::{json_to_xml, ErrorResponse, WireBody};

use crate::app::{AppState, Params};
use crate::domain::JobMode;
use crate::error::ApiError;

pub const API_KEY_HEADER: &str = "x-api-key";
pub const API_KEY_PARAM: &str = "api_key";

const XML: &str = "application/xml; charset=utf-8";
const JSON: &str = "application/json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xml,
    Json,
}

impl Format {
    /// JSON when the client accepts `application/json`, XML otherwise.
    pub fn negotiate(headers: &HeaderMap) -> Format {
        let wants_json = headers
            .get_all(header::ACCEPT)
            .iter()
            .filter_map(|v| v.to_str().ok())
            .flat_map(|v| v.split(','))
            .any(|v| v.split(';').next().unwrap_or("").trim().eq_ignore_ascii_case(JSON));
        if wants_json {
            Format::Json
        } else {
            Format::Xml
        }
    }
}

fn body(format: Format, status: StatusCode, xml: impl FnOnce() -> String, json: impl FnOnce() -> String) -> Response {
    let (content_type, text) = match format {
        Format::Xml => (XML, xml()),
        Format::Json => (JSON, json()),
    };
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static(content_type))], text).into_response()
}

fn wire(format: Format, b: &impl WireBody) -> Response {
    body(format, StatusCode::OK, || b.to_xml(), || b.to_json())
}

fn value(format: Format, status: StatusCode, root: &str, v: &impl Serialize) -> Response {
    let v = serde_json::to_value(v).expect("response bodies serialize");
    body(format, status, || json_to_xml(root, &v), || v.to_string())
}

fn error(format: Format, e: ApiError) -> Response {
    let b = ErrorResponse { status: e.status, error: e.message };
    let status = StatusCode::from_u16(b.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    body(format, status, || b.to_xml(), || b.to_json())
}

fn finish(format: Format, result: Result<Response, ApiError>) -> Response {
    result.unwrap_or_else(|e| error(format, e))
}

fn api_key<'a>(headers: &'a HeaderMap, params: &'a Params) -> Option<&'a str> {
    headers
        .get(API_KEY_HEADER)
        .and_then(|v| v.to_str().ok())
        .or_else(|| params.get(API_KEY_PARAM).map(String::as_str))
        .map(str::trim)
}

fn json_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::unprocessable(format!("invalid request body: {e}")))
}

/// Per-request context: negotiated format plus the authenticated account.
struct Ctx {
    format: Format,
    account: Result<String, ApiError>,
}

impl Ctx {
    fn new(state: &AppState, headers: &HeaderMap, params: &Params) -> Self {
        Ctx { format: Format::negotiate(headers), account: state.authenticate(api_key(headers, params)) }
    }

    fn account(&self) -> Result<&str, ApiError> {
        self.account.as_deref().map_err(Clone::clone)
    }
}

type St = State<Arc<AppState>>;
type Q = Query<HashMap<String, String>>;

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/accounts", post(create_account))
        .route("/keys", post(create_key))
        .route("/keys/current", delete(revoke_current_key))
        .route("/repositories", post(create_repository).get(list_repositories))
        .route("/repositories/{id}", get(show_repository).patch(patch_repository))
        .route("/repositories/{id}/vocabulary", post(upload_vocabulary))
        .route("/repositories/{id}/jobs", post(start_job))
        .route("/repositories/{id}/model", get(download_model))
        .route("/repositories/{id}/recommend", get(recommend))
        .route("/repositories/{id}/expand", get(expand))
        .route("/repositories/{id}/cloud", get(cloud))
        .route("/repositories/{id}/biblio/top-terms", get(top_terms))
        .route("/repositories/{id}/biblio/coword", get(coword))
        .route("/repositories/{id}/biblio/trend", get(trend))
        .route("/jobs/{id}", get(job_status));
    Router::new().route("/health", get(health)).nest("/api/v1", api).fallback(not_found).with_state(state)
}

async fn health(headers: HeaderMap) -> Response {
    value(Format::negotiate(&headers), StatusCode::OK, "health", &serde_json::json!({ "status": "ok" }))
}

async fn not_found(headers: HeaderMap) -> Response {
    error(Format::negotiate(&headers), ApiError::not_found("no such endpoint"))
}

async fn create_account(State(s): St, headers: HeaderMap, bytes: Bytes) -> Response {
    let format = Format::negotiate(&headers);
    finish(
        format,
        (|| {
            let issued = s.register_account(json_body(&bytes)?)?;
            Ok(value(format, StatusCode::CREATED, "account", &issued))
        })(),
    )
}

async fn create_key(State(s): St, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let issued = s.issue_key(ctx.account()?)?;
            Ok(value(ctx.format, StatusCode::CREATED, "key", &issued))
        })(),
    )
}

async fn revoke_current_key(State(s): St, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            ctx.account()?;
            s.revoke_key(api_key(&headers, &p).unwrap_or_default())?;
            Ok(StatusCode::NO_CONTENT.into_response())
        })(),
    )
}

async fn create_repository(State(s): St, headers: HeaderMap, Query(p): Q, bytes: Bytes) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    let result = async {
        let account = ctx.account()?;
        let view = s.register_repository(account, json_body(&bytes)?).await?;
        Ok(value(ctx.format, StatusCode::CREATED, "repository", &view))
    }
    .await;
    finish(ctx.format, result)
}

async fn list_repositories(State(s): St, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let views = s.list_repositories(ctx.account()?)?;
            Ok(value(ctx.format, StatusCode::OK, "repositories", &views))
        })(),
    )
}

async fn show_repository(State(s): St, Path(id): Path<String>, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let profile = s.owned_profile(ctx.account()?, &id)?;
            Ok(value(ctx.format, StatusCode::OK, "repository", &s.view(&profile)))
        })(),
    )
}

async fn patch_repository(
    State(s): St,
    Path(id): Path<String>,
    headers: HeaderMap,
    Query(p): Q,
    bytes: Bytes,
) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let view = s.patch_repository(ctx.account()?, &id, json_body(&bytes)?)?;
            Ok(value(ctx.format, StatusCode::OK, "repository", &view))
        })(),
    )
}

async fn upload_vocabulary(
    State(s): St,
    Path(id): Path<String>,
    headers: HeaderMap,
    Query(p): Q,
    bytes: Bytes,
) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let account = ctx.account()?;
            let text =
                std::str::from_utf8(&bytes).map_err(|_| ApiError::unprocessable("vocabulary must be UTF-8 text"))?;
            let summary = s.upload_vocabulary(account, &id, text)?;
            Ok(value(ctx.format, StatusCode::OK, "vocabulary", &summary))
        })(),
    )
}

async fn start_job(State(s): St, Path(id): Path<String>, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let account = ctx.account()?;
            let mode: JobMode =
                p.get("mode").map_or(Ok(JobMode::Full), |m| m.parse()).map_err(ApiError::unprocessable)?;
            let job = s.start_job(account, &id, mode)?;
            Ok(value(ctx.format, StatusCode::ACCEPTED, "job", &job))
        })(),
    )
}

async fn job_status(State(s): St, Path(id): Path<String>, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let job = s.job_status(ctx.account()?, &id)?;
            Ok(value(ctx.format, StatusCode::OK, "job", &job))
        })(),
    )
}

async fn download_model(State(s): St, Path(id): Path<String>, headers: HeaderMap, Query(p): Q) -> Response {
    let ctx = Ctx::new(&s, &headers, &p);
    finish(
        ctx.format,
        (|| {
            let bytes = s.model_bytes(ctx.account()?, &id)?;
            Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
        })(),
    )
}

macro_rules! read_endpoint {
    ($name:ident, $op:ident) => {
        async fn $name(State(s): St, Path(id): Path<String>, headers: HeaderMap, Query(p): Q) -> Response {
            let ctx = Ctx::new(&s, &headers, &p);
            finish(ctx.format, (|| Ok(wire(ctx.format, &s.$op(ctx.account()?, &id, &p)?)))())
        }
    };
}

read_endpoint!(recommend, recommend);
read_endpoint!(expand, expand);
read_endpoint!(cloud, cloud);
read_endpoint!(top_terms, top_terms);
read_endpoint!(coword, coword);
read_endpoint!(trend, trend);
