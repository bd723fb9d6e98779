//! HTTP front end for the recommendation engine.
//!
//! A session starts with a CSV upload and keeps the dataset, the channel map,
//! row filters and bookmarks. Every mutating call answers with a full snapshot.

pub mod error;
pub mod session;

use std::time::Duration;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, patch, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use vizrec_core::emitter::{self, render};
use vizrec_core::{CsvOptions, Dataset, EmitOptions, FilterClause, SchemaVersion, VarType};

pub use error::ApiError;
pub use session::{MappingOp, Session, SessionStore};

pub const DEFAULT_UPLOAD_LIMIT: usize = 20 * 1024 * 1024;
pub const DEFAULT_TTL: Duration = Duration::from_secs(2 * 60 * 60);

#[derive(Debug, Clone, clap::Args)]
pub struct Config {
    /// Idle time after which a session expires, in seconds.
    #[arg(long = "ttl-secs", env = "VIZREC_TTL_SECS", default_value_t = 7200)]
    pub ttl: u64,
    /// Largest accepted upload, in bytes.
    #[arg(long, env = "VIZREC_UPLOAD_LIMIT", default_value_t = DEFAULT_UPLOAD_LIMIT)]
    pub upload_limit: usize,
    /// Vega-Lite schema version of emitted documents (v4 or v5).
    #[arg(long, env = "VIZREC_SCHEMA", default_value = "v5")]
    pub schema: SchemaVersion,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ttl: DEFAULT_TTL.as_secs(),
            upload_limit: DEFAULT_UPLOAD_LIMIT,
            schema: SchemaVersion::V5,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: SessionStore,
    pub upload_limit: usize,
    pub schema: SchemaVersion,
}

impl AppState {
    pub fn new(config: &Config) -> AppState {
        AppState::with_ttl(config, Duration::from_secs(config.ttl))
    }

    pub fn with_ttl(config: &Config, ttl: Duration) -> AppState {
        AppState {
            store: SessionStore::new(ttl),
            upload_limit: config.upload_limit,
            schema: config.schema,
        }
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.upload_limit;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/mapping", patch(patch_mapping))
        .route("/sessions/{id}/types/{var}", put(put_type))
        .route("/sessions/{id}/filters", put(put_filters))
        .route("/sessions/{id}/recommendations", get(get_recommendations))
        .route("/sessions/{id}/spec", get(get_spec))
        .route("/sessions/{id}/bookmarks", post(add_bookmark).get(list_bookmarks))
        .route("/sessions/{id}/bookmarks/{bid}", delete(remove_bookmark))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

#[derive(Debug, Default, Deserialize)]
struct UploadParams {
    name: Option<String>,
    delimiter: Option<char>,
    header: Option<bool>,
}

async fn create_session(
    State(state): State<AppState>,
    Query(params): Query<UploadParams>,
    req: Request,
) -> Result<Response, ApiError> {
    let multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let limit = state.upload_limit;
    let (bytes, filename) = if multipart {
        read_multipart(req, &state, limit).await?
    } else {
        let bytes = to_bytes(req.into_body(), limit)
            .await
            .map_err(|_| ApiError::payload_too_large(limit))?;
        (bytes, None)
    };
    if bytes.len() > limit {
        return Err(ApiError::payload_too_large(limit));
    }
    let options = CsvOptions {
        delimiter: params.delimiter.map_or(b',', |c| c as u8),
        has_header: params.header.unwrap_or(true),
        name: params.name.or(filename).unwrap_or_else(|| "data.csv".into()),
    };
    let dataset = Dataset::from_csv(&bytes, &options)?;
    let session = state.store.create(dataset);
    let snapshot = session.read().await.snapshot(state.schema)?;
    tracing::info!(session = %snapshot["id"], "session created");
    Ok((StatusCode::CREATED, Json(snapshot)).into_response())
}

async fn read_multipart(
    req: Request,
    state: &AppState,
    limit: usize,
) -> Result<(Bytes, Option<String>), ApiError> {
    let mut form = Multipart::from_request(req, state)
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?;
    let too_large = |e: axum::extract::multipart::MultipartError| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::payload_too_large(limit)
        } else {
            ApiError::bad_request(e.body_text())
        }
    };
    while let Some(field) = form.next_field().await.map_err(too_large)? {
        if field.name() == Some("file") || field.file_name().is_some() {
            let name = field.file_name().map(str::to_string);
            let bytes = field.bytes().await.map_err(too_large)?;
            return Ok((bytes, name));
        }
    }
    Err(ApiError::bad_request("multipart body has no `file` part"))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let s = session.read().await;
    Ok(Json(s.snapshot(state.schema)?))
}

async fn patch_mapping(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let invalid = |e: serde_json::Error| ApiError::bad_request(format!("invalid mapping op: {e}"));
    let ops: Vec<MappingOp> = match parse_json::<Value>(&body)? {
        list @ Value::Array(_) => serde_json::from_value(list).map_err(invalid)?,
        single => vec![serde_json::from_value(single).map_err(invalid)?],
    };
    let mut s = session.write().await;
    s.apply(&ops)?;
    Ok(Json(s.snapshot(state.schema)?))
}

#[derive(Deserialize)]
struct TypeBody {
    #[serde(rename = "type")]
    var_type: String,
}

async fn put_type(
    State(state): State<AppState>,
    Path((id, var)): Path<(String, String)>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let TypeBody { var_type } = parse_json(&body)?;
    let to: VarType = var_type.parse()?;
    let mut s = session.write().await;
    s.set_type(&var, to)?;
    Ok(Json(s.snapshot(state.schema)?))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FiltersBody {
    List(Vec<FilterClause>),
    Wrapped { filters: Vec<FilterClause> },
}

async fn put_filters(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let filters = match parse_json(&body)? {
        FiltersBody::List(f) | FiltersBody::Wrapped { filters: f } => f,
    };
    let mut s = session.write().await;
    s.set_filters(filters)?;
    Ok(Json(s.snapshot(state.schema)?))
}

async fn get_recommendations(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let s = session.read().await;
    Ok(Json(s.recommendations(state.schema)?))
}

/// The main chart with its rows embedded, as compact JSON.
async fn get_spec(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.store.get(&id)?;
    let s = session.read().await;
    let spec = s.main_spec()?.ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "empty_mapping", "nothing is assigned to x or y")
    })?;
    let options = EmitOptions {
        schema: state.schema,
        ..EmitOptions::default()
    };
    let doc = emitter::to_vegalite(&spec, &s.dataset, options)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], Body::from(render(&doc, false))).into_response())
}

#[derive(Deserialize)]
struct BookmarkBody {
    spec: Value,
    #[serde(default)]
    question: String,
}

async fn add_bookmark(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = state.store.get(&id)?;
    let BookmarkBody { spec, question } = parse_json(&body)?;
    let mut s = session.write().await;
    let created = s.add_bookmark(&spec, question, state.schema)?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn list_bookmarks(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.store.get(&id)?;
    let s = session.read().await;
    Ok(Json(s.bookmarks_json(state.schema)?))
}

async fn remove_bookmark(
    State(state): State<AppState>,
    Path((id, bid)): Path<(String, String)>,
) -> Result<StatusCode, ApiError> {
    let session = state.store.get(&id)?;
    session.write().await.remove_bookmark(&bid)?;
    Ok(StatusCode::NO_CONTENT)
}

/// Removes idle sessions every `period`.
pub fn spawn_sweeper(store: SessionStore, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let dropped = store.sweep();
            if dropped > 0 {
                tracing::debug!(dropped, "expired sessions dropped");
            }
        }
    })
}
