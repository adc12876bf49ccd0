//! HTTP API over the session store.
//!
//! Every JSON body, request or response, carries `schema_version`. Errors
//! come back as `{"schema_version": 1, "error": {"code", "message", "fields"?}}`.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use popgen_core::params::{Fitness, Mode};
use popgen_core::rng::fresh_seed;
use popgen_core::session::protocol;
use popgen_core::session::SCHEMA_VERSION;
use popgen_core::{
    ChartVariant, Error, ExperimentKind, ExperimentSession, GenerationRecord, GenotypeCounts, SessionStore,
    SimulationParams,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub const API_PREFIX: &str = "/api";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
}

/// The API router, plus static files from `static_dir` for every other
/// path when given.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/experiments", get(list_experiments))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/generations", post(enter_generation))
        .route("/sessions/{id}/auto-step", post(auto_step))
        .route("/sessions/{id}/charts", get(chart))
        .route("/sessions/{id}/export.csv", get(export_csv))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no_route", "no such endpoint") });
    let app = Router::new().nest(API_PREFIX, api).with_state(AppState { store });
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "code": code, "message": message.into() }),
        }
    }

    fn malformed(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string())
    }
}

pub fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Sequencing { .. } | Error::Terminated(_) | Error::NoParental | Error::NoData => StatusCode::CONFLICT,
        Error::UnsupportedSchema { .. } => StatusCode::BAD_REQUEST,
        Error::Integrity(_) | Error::Io(_) | Error::Csv(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let mut body = json!({ "code": err.code(), "message": err.to_string() });
        if let Error::Validation(fields) = &err {
            body["fields"] = serde_json::to_value(&fields.0).expect("field errors serialize");
        }
        Self {
            status: status_for(&err),
            body,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "schema_version": SCHEMA_VERSION, "error": self.body });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T = Response> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(ApiError::malformed)
}

fn check_version(v: Option<u64>) -> ApiResult<()> {
    match v {
        Some(found) if found != SCHEMA_VERSION => Err(Error::UnsupportedSchema {
            found,
            supported: SCHEMA_VERSION,
        }
        .into()),
        _ => Ok(()),
    }
}

fn ok(status: StatusCode, mut body: Value) -> Response {
    body["schema_version"] = json!(SCHEMA_VERSION);
    (status, Json(body)).into_response()
}

/// The session as delivered to clients.
pub fn session_view(s: &ExperimentSession) -> Value {
    let mut v = serde_json::to_value(s).expect("session serializes");
    v["instruction"] = json!(s.instruction());
    v["next_generation"] = json!(s.next_generation());
    v
}

fn mutation(session: &ExperimentSession, record: &GenerationRecord) -> Value {
    json!({ "record": record, "session": session_view(session) })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsInput {
    pub n: Option<u64>,
    pub fitness: Option<Fitness>,
    pub migration_rate: Option<f64>,
    pub migrant_freq: Option<f64>,
    pub generations: Option<u64>,
    /// A fresh seed is drawn when absent; the session reports it.
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub initial_p: Option<f64>,
}

impl ParamsInput {
    pub fn resolve(self, kind: ExperimentKind) -> SimulationParams {
        let mut p = SimulationParams::new(kind).with_seed(self.seed.unwrap_or_else(fresh_seed));
        if let Some(n) = self.n {
            p.n = n;
        }
        if let Some(f) = self.fitness {
            p.fitness = f;
        }
        if let Some(m) = self.migration_rate {
            p.migration_rate = m;
        }
        if let Some(pm) = self.migrant_freq {
            p.migrant_freq = pm;
        }
        if let Some(g) = self.generations {
            p.generations = g;
        }
        if let Some(mode) = self.mode {
            p.mode = mode;
        }
        p.initial_p = self.initial_p;
        p
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    schema_version: Option<u64>,
    kind: ExperimentKind,
    #[serde(default)]
    params: Option<ParamsInput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnterGeneration {
    schema_version: Option<u64>,
    t: usize,
    counts: GenotypeCounts,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutoStep {
    schema_version: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct ChartQuery {
    variant: Option<String>,
}

#[derive(Serialize)]
struct ExperimentInfo {
    kind: ExperimentKind,
    headline: popgen_core::Estimator,
    steps: &'static [&'static str],
}

async fn list_experiments() -> Response {
    let list: Vec<_> = ExperimentKind::ALL
        .iter()
        .map(|&kind| ExperimentInfo {
            kind,
            headline: kind.headline(),
            steps: protocol::steps(kind),
        })
        .collect();
    ok(StatusCode::OK, json!({ "experiments": list }))
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult {
    let req: CreateSession = parse_body(&body)?;
    check_version(req.schema_version)?;
    let params = req.params.unwrap_or_default().resolve(req.kind);
    let session = ExperimentSession::create(req.kind, params)?;
    app.store.save_session(&session)?;
    Ok(ok(StatusCode::CREATED, json!({ "session": session_view(&session) })))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let session = app.store.load_session(&id)?;
    Ok(ok(StatusCode::OK, json!({ "session": session_view(&session) })))
}

async fn enter_generation(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    // resolve the session first so an unknown id is a 404 whatever the body
    app.store.load_session(&id)?;
    let req: EnterGeneration = parse_body(&body)?;
    check_version(req.schema_version)?;
    let body = app.store.update(&id, |s| {
        let record = s.record_manual_counts(req.t, req.counts, req.note)?;
        Ok(mutation(s, &record))
    })?;
    Ok(ok(StatusCode::OK, body))
}

async fn auto_step(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    app.store.load_session(&id)?;
    let req: AutoStep = if body.iter().all(u8::is_ascii_whitespace) {
        AutoStep::default()
    } else {
        parse_body(&body)?
    };
    check_version(req.schema_version)?;
    let body = app.store.update(&id, |s| {
        let record = s.auto_step()?;
        Ok(mutation(s, &record))
    })?;
    Ok(ok(StatusCode::OK, body))
}

async fn chart(State(app): State<AppState>, Path(id): Path<String>, Query(q): Query<ChartQuery>) -> ApiResult {
    let session = app.store.load_session(&id)?;
    let variant: ChartVariant = match q.variant.as_deref() {
        None => ChartVariant::LineGraph,
        Some(v) => v
            .parse()
            .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e))?,
    };
    let series = session.chart_series(variant)?;
    Ok(ok(StatusCode::OK, json!({ "chart": series })))
}

async fn export_csv(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let session = app.store.load_session(&id)?;
    let bytes = session.export_csv()?;
    let disposition = format!("attachment; filename=\"session-{}.csv\"", session.id());
    Ok((
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        bytes,
    )
        .into_response())
}
