//! HTTP front end for diagnostic interview sessions.
//!
//! Sessions live in an in-memory registry. Each session sits behind its own
//! mutex, so requests against one session are serialized while different
//! sessions proceed in parallel. With a snapshot directory configured, every
//! mutation writes the session's evidence log to `<dir>/<id>.json`, and
//! startup replays those logs.

mod error;
pub mod wire;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use openprobe::engine::{start_session, Finding, Mode, Phase, Session};
use openprobe::kb::{write_canonical, KnowledgeBase};
use openprobe::report::OpenProbeResponse;
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ErrorBody};
use wire::*;

/// Number of questions returned when `k` is not given.
pub const DEFAULT_QUESTIONS: usize = 3;

struct Entry {
    kb_name: String,
    created_at: u64,
    session: Session,
}

/// Shared service state: the loaded knowledge bases and the session registry.
pub struct AppState {
    kbs: BTreeMap<String, Arc<KnowledgeBase>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    snapshot_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    id: String,
    kb: String,
    mode: Mode,
    phase: Phase,
    created_at: u64,
    log: Vec<Finding>,
}

impl AppState {
    pub fn new(kbs: BTreeMap<String, Arc<KnowledgeBase>>) -> Self {
        AppState {
            kbs,
            sessions: RwLock::new(HashMap::new()),
            snapshot_dir: None,
        }
    }

    /// Persists sessions under `dir` and restores any sessions already there.
    /// Returns the number of restored sessions.
    pub fn with_snapshots(mut self, dir: impl Into<PathBuf>) -> std::io::Result<(Self, usize)> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut restored = 0;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            match self.restore(&path) {
                Ok(()) => restored += 1,
                Err(e) => log::warn!("skipping snapshot {}: {e}", path.display()),
            }
        }
        self.snapshot_dir = Some(dir);
        Ok((self, restored))
    }

    fn restore(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let kb = self
            .kbs
            .get(&snap.kb)
            .ok_or_else(|| format!("unknown kb `{}`", snap.kb))?
            .clone();
        let session =
            Session::restore(snap.id.clone(), kb, snap.mode, snap.phase, snap.log).map_err(|e| e.to_string())?;
        let entry = Entry {
            kb_name: snap.kb,
            created_at: snap.created_at,
            session,
        };
        self.sessions
            .get_mut()
            .expect("registry lock")
            .insert(snap.id, Arc::new(Mutex::new(entry)));
        Ok(())
    }

    pub fn kb_names(&self) -> Vec<String> {
        self.kbs.keys().cloned().collect()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn persist(&self, entry: &Entry) -> Result<(), ApiError> {
        let Some(dir) = &self.snapshot_dir else {
            return Ok(());
        };
        let snap = Snapshot {
            id: entry.session.id().to_string(),
            kb: entry.kb_name.clone(),
            mode: entry.session.mode(),
            phase: entry.session.phase(),
            created_at: entry.created_at,
            log: entry.session.log().to_vec(),
        };
        let value = serde_json::to_value(&snap).map_err(|e| ApiError::internal(e.to_string()))?;
        let mut text = String::new();
        write_canonical(&value, 0, &mut text);
        text.push('\n');
        let path = dir.join(format!("{}.json", snap.id));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)
            .and_then(|()| std::fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(format!("snapshot write failed: {e}")))
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Runs `f` on a session off the async executor, holding that session's lock.
async fn with_entry<T, F>(state: &Arc<AppState>, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &mut Entry) -> Result<T, ApiError> + Send + 'static,
{
    let entry = state.entry(id)?;
    let state = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = entry.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        f(&state, &mut guard)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/healthz", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/open-probe", post(post_open_probe))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/questions", get(get_questions))
        .route("/sessions/{id}/differential", get(get_differential))
        .route("/sessions/{id}/params", get(get_params))
        .layer(cors)
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        kbs: state.kb_names(),
    })
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionResource>), ApiError> {
    let Json(req) = body?;
    let mode: Mode = req
        .mode
        .parse()
        .map_err(|m: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid_mode", m).with_field("mode"))?;
    let kb = state.kbs.get(&req.kb).cloned().ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_kb",
            format!("no knowledge base `{}`", req.kb),
        )
        .with_field("kb")
    })?;
    let id = uuid::Uuid::new_v4().to_string();
    let kb_name = req.kb.clone();
    let st = state.clone();
    let (resource, entry) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let session = start_session(id, kb, mode)?;
        let entry = Entry {
            kb_name,
            created_at: now_ms(),
            session,
        };
        st.persist(&entry)?;
        Ok((
            SessionResource::of(&entry.kb_name, entry.created_at, &entry.session),
            entry,
        ))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    state
        .sessions
        .write()
        .expect("registry lock")
        .insert(resource.id.clone(), Arc::new(Mutex::new(entry)));
    log::info!(
        "created session {} on {} in {}",
        resource.id,
        resource.kb,
        resource.mode
    );
    Ok((StatusCode::CREATED, Json(resource)))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionResource>, ApiError> {
    with_entry(&state, &id, |_, e| {
        Ok(SessionResource::of(&e.kb_name, e.created_at, &e.session))
    })
    .await
    .map(Json)
}

async fn post_open_probe(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<OpenProbeBody>, JsonRejection>,
) -> Result<Json<DifferentialView>, ApiError> {
    let Json(body) = body?;
    with_entry(&state, &id, move |st, e| {
        let response = OpenProbeResponse {
            question: String::new(),
            reported: body.reported,
        };
        e.session.submit_open_probe(&response)?;
        st.persist(e)?;
        Ok(DifferentialView::of(&e.session))
    })
    .await
    .map(Json)
}

async fn post_answer(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Json<DifferentialView>, ApiError> {
    let Json(body) = body?;
    with_entry(&state, &id, move |st, e| {
        e.session.submit_closed_probe(&body.symptom, &body.state)?;
        st.persist(e)?;
        Ok(DifferentialView::of(&e.session))
    })
    .await
    .map(Json)
}

async fn get_questions(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<QuestionsQuery>, QueryRejection>,
) -> Result<Json<QuestionsView>, ApiError> {
    let Query(query) = query?;
    let k = query.k.unwrap_or(DEFAULT_QUESTIONS);
    with_entry(&state, &id, move |_, e| {
        Ok(QuestionsView {
            session: e.session.id().to_string(),
            questions: e.session.next_questions(k)?,
        })
    })
    .await
    .map(Json)
}

async fn get_differential(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<DifferentialView>, ApiError> {
    with_entry(&state, &id, |_, e| Ok(DifferentialView::of(&e.session)))
        .await
        .map(Json)
}

async fn get_params(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ParamsView>, ApiError> {
    with_entry(&state, &id, |_, e| {
        let params = e.session.param_posteriors()?;
        Ok(ParamsView {
            session: e.session.id().to_string(),
            mode: e.session.mode(),
            params: params.iter().map(ParamView::from).collect(),
        })
    })
    .await
    .map(Json)
}

/// Serves `state` on an already-bound listener until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
