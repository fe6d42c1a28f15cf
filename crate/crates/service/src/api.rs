//! HTTP API over in-memory model sessions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use geobim_core::checks::OverhangLimit;
use geobim_core::export::{wkt_csv, Frame};
use geobim_core::footprint::FootprintParams;
use geobim_core::pipeline::{self, Config, PipelineError};
use geobim_core::ExecMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::config::FileConfig;
use crate::session::{self, json_bytes, Session};

/// Error body: a code per module error, a message and optional detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Option<String>,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { code: code.into(), message: message.into(), detail: None, status: status.as_u16() }
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_params", message)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match e.code() {
            "invalid_params" | "unknown_storey" => StatusCode::BAD_REQUEST,
            "io_error" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let detail = match &e {
            PipelineError::Step(s) => Some(format!("{s:?}")),
            _ => None,
        };
        ApiError { code: e.code().into(), message: e.to_string(), detail, status: status.as_u16() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, [(header::CONTENT_TYPE, "application/json")], json_bytes(&self)).into_response()
    }
}

/// A finished computation: status, content type, extra headers and body.
#[derive(Debug, Clone)]
struct Computed {
    status: StatusCode,
    content_type: &'static str,
    headers: Vec<(&'static str, String)>,
    body: Vec<u8>,
}

impl Computed {
    fn json(body: Vec<u8>) -> Self {
        Computed { status: StatusCode::OK, content_type: "application/json", headers: vec![], body }
    }
}

impl IntoResponse for Computed {
    fn into_response(self) -> Response {
        let mut r = (self.status, [(header::CONTENT_TYPE, self.content_type)], self.body).into_response();
        for (k, v) in self.headers {
            if let Ok(v) = HeaderValue::from_str(&v) {
                r.headers_mut().insert(k, v);
            }
        }
        r
    }
}

enum Job {
    Running,
    Done(Result<Computed, ApiError>),
}

pub struct AppState {
    pub config: FileConfig,
    pub mode: ExecMode,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    jobs: Mutex<HashMap<String, Job>>,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(config: FileConfig, mode: ExecMode) -> Arc<Self> {
        Arc::new(AppState { config, mode, sessions: RwLock::new(HashMap::new()), jobs: Mutex::new(HashMap::new()), counter: AtomicU64::new(0) })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    fn next_id(&self, seed: &str) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let d = Sha256::digest(format!("{seed}:{n}:{:?}", std::time::SystemTime::now()).as_bytes());
        d.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().map(|s| s.len()).unwrap_or(0)
    }
}

/// Runs `f` on the blocking pool; answers 202 with a poll token if it takes
/// longer than the configured threshold.
async fn compute<F>(state: &Arc<AppState>, f: F) -> Response
where
    F: FnOnce() -> Result<Computed, ApiError> + Send + 'static,
{
    let mut handle = tokio::task::spawn_blocking(f);
    let wait = Duration::from_millis(state.config.server.async_threshold_ms);
    match tokio::time::timeout(wait, &mut handle).await {
        Ok(joined) => flatten(joined).into_response(),
        Err(_) => {
            let token = state.next_id("job");
            state.jobs.lock().unwrap_or_else(|e| e.into_inner()).insert(token.clone(), Job::Running);
            let st = state.clone();
            let t = token.clone();
            tokio::spawn(async move {
                let r = flatten(handle.await);
                st.jobs.lock().unwrap_or_else(|e| e.into_inner()).insert(t, Job::Done(r));
            });
            pending(&token)
        }
    }
}

fn flatten(joined: Result<Result<Computed, ApiError>, tokio::task::JoinError>) -> Result<Computed, ApiError> {
    joined.unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())))
}

fn pending(token: &str) -> Response {
    let poll = format!("/jobs/{token}");
    let body = json_bytes(&serde_json::json!({ "status": "pending", "token": token, "poll": poll }));
    (StatusCode::ACCEPTED, [(header::CONTENT_TYPE, "application/json".to_string()), (header::LOCATION, poll)], body).into_response()
}

async fn job(State(state): State<Arc<AppState>>, Path(token): Path<String>) -> Response {
    let mut jobs = state.jobs.lock().unwrap_or_else(|e| e.into_inner());
    match jobs.get(&token) {
        None => ApiError::new(StatusCode::NOT_FOUND, "unknown_job", format!("no job {token}")).into_response(),
        Some(Job::Running) => pending(&token),
        Some(Job::Done(_)) => match jobs.remove(&token) {
            Some(Job::Done(r)) => r.into_response(),
            _ => pending(&token),
        },
    }
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

async fn read_upload(state: &Arc<AppState>, q: UploadQuery, req: Request) -> Result<Vec<(String, Vec<u8>)>, ApiError> {
    let multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let too_large = |status: StatusCode, msg: String| {
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(status, "payload_too_large", format!("upload exceeds {} bytes", state.config.server.upload_cap_bytes))
        } else {
            ApiError::bad_request(msg)
        }
    };
    let mut files = Vec::new();
    if multipart {
        let mut mp = Multipart::from_request(req, state).await.map_err(|e| too_large(e.status(), e.body_text()))?;
        while let Some(field) = mp.next_field().await.map_err(|e| too_large(e.status(), e.body_text()))? {
            let name = field.file_name().or(field.name()).map(str::to_string).unwrap_or_else(|| format!("model{}.ifc", files.len()));
            let bytes = field.bytes().await.map_err(|e| too_large(e.status(), e.body_text()))?;
            files.push((name, bytes.to_vec()));
        }
    } else {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| {
            let r = e.into_response();
            too_large(r.status(), "could not read upload body".into())
        })?;
        files.push((q.name.unwrap_or_else(|| "model.ifc".into()), bytes.to_vec()));
    }
    if files.is_empty() || files.iter().all(|(_, b)| b.is_empty()) {
        return Err(ApiError::bad_request("no IFC content uploaded"));
    }
    Ok(files)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub files: Vec<String>,
    pub fingerprint: String,
    pub storeys: usize,
    pub elements: usize,
}

async fn create_model(State(state): State<Arc<AppState>>, Query(q): Query<UploadQuery>, req: Request) -> Result<Response, ApiError> {
    let files = read_upload(&state, q, req).await?;
    let id = state.next_id(&session::fingerprint(&files));
    let cfg = state.config.pipeline.clone();
    let mode = state.mode;
    let sid = id.clone();
    let loaded = tokio::task::spawn_blocking(move || Session::load(sid, &files, cfg, mode))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let body = SessionCreated {
        session_id: id.clone(),
        files: loaded.files.clone(),
        fingerprint: loaded.fingerprint.clone(),
        storeys: loaded.model.storeys.len(),
        elements: loaded.model.element_count(),
    };
    state.sessions.write().unwrap_or_else(|e| e.into_inner()).insert(id, Arc::new(loaded));
    Ok((StatusCode::CREATED, [(header::CONTENT_TYPE, "application/json")], json_bytes(&body)).into_response())
}

async fn storeys(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    Ok(Computed::json(json_bytes(&session::storey_infos(&s.model))).into_response())
}

async fn delete_model(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state.sessions.write().unwrap_or_else(|e| e.into_inner()).remove(&id).map(|_| StatusCode::NO_CONTENT).ok_or_else(|| ApiError::not_found(&id))
}

/// Footprint parameters plus the reference storey; omitted fields fall back
/// to the server configuration.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FootprintRequest {
    pub reference_storey: Option<String>,
    pub cut_offset: Option<f64>,
    pub sample_spacing: Option<f64>,
    pub dbscan_eps: Option<f64>,
    pub dbscan_min_pts: Option<usize>,
    pub hull_k: Option<usize>,
    pub overlap_basis: Option<geobim_core::footprint::OverlapBasis>,
}

impl FootprintRequest {
    fn resolve(&self, base: &Config) -> (FootprintParams, String) {
        let d = base.footprint;
        let p = FootprintParams {
            cut_offset: self.cut_offset.unwrap_or(d.cut_offset),
            sample_spacing: self.sample_spacing.unwrap_or(d.sample_spacing),
            dbscan_eps: self.dbscan_eps.unwrap_or(d.dbscan_eps),
            dbscan_min_pts: self.dbscan_min_pts.unwrap_or(d.dbscan_min_pts),
            hull_k: self.hull_k.unwrap_or(d.hull_k),
            overlap_basis: self.overlap_basis.unwrap_or(d.overlap_basis),
        };
        (p, self.reference_storey.clone().unwrap_or_else(|| base.reference_storey.clone()))
    }
}

fn parse_json<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn cache_header(hit: bool) -> Vec<(&'static str, String)> {
    vec![("x-cache", if hit { "hit" } else { "miss" }.to_string())]
}

async fn footprints(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: FootprintRequest = parse_json(&body)?;
    let (params, reference) = req.resolve(&s.config);
    params.validate().map_err(|e| ApiError::from(PipelineError::from(e)))?;
    let mode = state.mode;
    Ok(compute(&state, move || {
        let (set, hit) = s.footprints(&params, &reference, mode)?;
        Ok(Computed { headers: cache_header(hit), ..Computed::json(json_bytes(&session::footprints_out(&s.model, &set))) })
    })
    .await)
}

async fn overlaps(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: FootprintRequest = parse_json(&body)?;
    let (params, reference) = req.resolve(&s.config);
    params.validate().map_err(|e| ApiError::from(PipelineError::from(e)))?;
    let mode = state.mode;
    Ok(compute(&state, move || {
        let (set, hit) = s.footprints(&params, &reference, mode)?;
        Ok(Computed { headers: cache_header(hit), ..Computed::json(json_bytes(&session::overlaps_out(&s.model, &set))) })
    })
    .await)
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct OverhangRequest {
    pub lines: Vec<OverhangLimit>,
    pub storeys: Option<Vec<String>>,
}

async fn overhang(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: OverhangRequest = parse_json(&body)?;
    if req.lines.is_empty() {
        return Err(ApiError::bad_request("at least one overhang line is required"));
    }
    for l in &req.lines {
        l.validate().map_err(|e| ApiError::from(PipelineError::from(e)))?;
    }
    let mode = state.mode;
    Ok(compute(&state, move || {
        let out = session::overhang_out(&s.model, &s.config, &req.lines, req.storeys.as_deref(), mode)?;
        Ok(Computed::json(json_bytes(&out)))
    })
    .await)
}

/// Rule-suite parameters. Load-time settings (strictness, ground storey,
/// repair) are fixed when the session is created and ignored here.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct CheckRequest {
    pub regulation: Option<geobim_core::checks::RegulationParams>,
    pub footprint: Option<FootprintParams>,
    pub lint: Option<geobim_core::checks::LintParams>,
    pub reference_storey: Option<String>,
}

async fn checks(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: CheckRequest = parse_json(&body)?;
    let mut cfg = s.config.clone();
    if let Some(r) = req.regulation {
        cfg.regulation = r;
    }
    if let Some(f) = req.footprint {
        cfg.footprint = f;
    }
    if let Some(l) = req.lint {
        cfg.lint = l;
    }
    if let Some(r) = req.reference_storey {
        cfg.reference_storey = r;
    }
    cfg.validate()?;
    let mode = state.mode;
    Ok(compute(&state, move || {
        let (set, hit) = s.footprints(&cfg.footprint, &cfg.reference_storey, mode)?;
        let body = session::check_body(&s.model, &cfg, &set)?;
        Ok(Computed { headers: cache_header(hit), ..Computed::json(body) })
    })
    .await)
}

#[derive(Debug, Deserialize)]
struct WktQuery {
    frame: Option<String>,
}

async fn export_wkt(State(state): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<WktQuery>) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let frame: Frame = q.frame.as_deref().unwrap_or("model-local").parse().map_err(ApiError::bad_request)?;
    let mode = state.mode;
    Ok(compute(&state, move || {
        let (set, _) = s.footprints(&s.config.footprint, &s.config.reference_storey, mode)?;
        let records = pipeline::export_wkt(&s.model, &set, frame)?;
        Ok(Computed { content_type: "text/csv", ..Computed::json(wkt_csv(&records).into_bytes()) })
    })
    .await)
}

async fn health() -> &'static str {
    "ok"
}

fn cors(origin: &str) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods([Method::GET, Method::POST, Method::DELETE, Method::OPTIONS]).allow_headers(Any);
    match HeaderValue::from_str(origin) {
        Ok(v) if origin != "*" => layer.allow_origin(AllowOrigin::exact(v)),
        _ => layer.allow_origin(Any),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cap = state.config.server.upload_cap_bytes;
    let origin = state.config.server.cors_origin.clone();
    Router::new()
        .route("/health", get(health))
        .route("/models", post(create_model))
        .route("/models/{id}", axum::routing::delete(delete_model))
        .route("/models/{id}/storeys", get(storeys))
        .route("/models/{id}/footprints", post(footprints))
        .route("/models/{id}/overlaps", post(overlaps))
        .route("/models/{id}/overhang", post(overhang))
        .route("/models/{id}/checks", post(checks))
        .route("/models/{id}/export/wkt", get(export_wkt))
        .route("/jobs/{token}", get(job))
        .layer(DefaultBodyLimit::max(cap))
        .layer(cors(&origin))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: FileConfig, mode: ExecMode) -> std::io::Result<()> {
    let addr = format!("{}:{}", config.server.bind, config.server.port);
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    let app = router(AppState::new(config, mode));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
