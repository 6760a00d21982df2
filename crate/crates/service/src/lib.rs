//! HTTP service for live teaching sessions. See `API.md` in this crate for
//! the endpoint table and payloads.

pub mod session;

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex, RwLock};

use langreward::corpus::write_records;

pub use session::{
    ActResponse, BeliefView, CreateSession, EventKind, FeedbackResponse, Phase, Pickup, Session, SessionContext,
    SessionError, SessionEvent, SessionView, LEVELS_PER_SESSION,
};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// When set, each session's episodes are appended to
    /// `<dir>/<session_id>.jsonl` as they complete.
    pub data_dir: Option<PathBuf>,
}

struct Entry {
    session: Mutex<Session>,
    events: broadcast::Sender<SessionEvent>,
}

#[derive(Clone)]
pub struct AppState {
    ctx: Arc<SessionContext>,
    config: Arc<ServiceConfig>,
    sessions: Arc<RwLock<HashMap<String, Arc<Entry>>>>,
    counter: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(ctx: SessionContext, config: ServiceConfig) -> Self {
        Self {
            ctx: Arc::new(ctx),
            config: Arc::new(config),
            sessions: Default::default(),
            counter: Default::default(),
        }
    }

    async fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()).into())
    }
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            SessionError::Phase { .. } => (StatusCode::CONFLICT, "phase"),
            SessionError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            SessionError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            SessionError::Core(langreward::Error::InvalidRewardFunction(_)) => (StatusCode::BAD_REQUEST, "invalid_rf"),
            SessionError::Core(langreward::Error::NotReady { .. }) => (StatusCode::BAD_REQUEST, "not_ready"),
            SessionError::Core(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(ErrorBody { error: self.0.to_string(), kind: kind.into() })).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_state))
        .route("/sessions/{id}/act", post(act))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state)).await
}

fn publish(entry: &Entry, from: usize, session: &Session) {
    for e in &session.events()[from..] {
        // No subscribers is fine.
        let _ = entry.events.send(e.clone());
    }
}

async fn create_session(State(state): State<AppState>, body: Option<Json<CreateSession>>) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let n = state.counter.fetch_add(1, Ordering::SeqCst) + 1;
    let id = format!("s{n:06}");
    let ctx = state.ctx.clone();
    let session = tokio::task::spawn_blocking(move || Session::create(id, &req, &ctx))
        .await
        .map_err(|e| SessionError::BadRequest(e.to_string()))??;
    let view = session.view();
    let (tx, _) = broadcast::channel(256);
    let entry = Arc::new(Entry { session: Mutex::new(session), events: tx });
    state.sessions.write().await.insert(view.session_id.clone(), entry);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id).await?;
    let s = entry.session.lock().await;
    Ok(Json(s.view()))
}

async fn act(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ActResponse>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut s = entry.session.lock().await;
    let from = s.events().len();
    let resp = s.act()?;
    publish(&entry, from, &s);
    Ok(Json(resp))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackRequest {
    pub messages: Vec<String>,
}

async fn feedback(State(state): State<AppState>, Path(id): Path<String>, Json(req): Json<FeedbackRequest>) -> Result<Json<FeedbackResponse>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut s = entry.session.lock().await;
    let from = s.events().len();
    let n_records = s.records().len();
    let resp = s.feedback(&req.messages)?;
    if let Some(dir) = &state.config.data_dir {
        persist(dir, &s, n_records).map_err(SessionError::Core)?;
    }
    publish(&entry, from, &s);
    Ok(Json(resp))
}

fn persist(dir: &std::path::Path, s: &Session, from: usize) -> langreward::Result<()> {
    use std::io::Write;
    let path = dir.join(format!("{}.jsonl", s.id));
    if from == 0 {
        let mut f = std::fs::File::create(&path)?;
        write_records(&mut f, s.records())?;
        return Ok(());
    }
    let mut f = std::fs::OpenOptions::new().append(true).open(&path)?;
    for r in &s.records()[from..] {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.entry(&id).await?;
    let s = entry.session.lock().await;
    let mut buf = Vec::new();
    write_records(&mut buf, s.records()).map_err(SessionError::Core)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], buf).into_response())
}

/// Past events first, then live ones. A lagging client's missed events are
/// dropped from the live tail; it can refetch the full transcript.
async fn events(State(state): State<AppState>, Path(id): Path<String>) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let entry = state.entry(&id).await?;
    let (past, rx) = {
        let s = entry.session.lock().await;
        (s.events().to_vec(), entry.events.subscribe())
    };
    let last_seq = past.last().map(|e| e.seq);
    let live = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(e) => return Some((e, rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
    .filter(move |e| futures::future::ready(last_seq.is_none_or(|s| e.seq > s)));
    let all = stream::iter(past).chain(live).map(|e| {
        Ok(Event::default()
            .event(serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .id(e.seq.to_string())
            .json_data(&e)
            .expect("event serializes"))
    });
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}
