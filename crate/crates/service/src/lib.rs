//! Session service: decision epochs, recommendations, queries and tree
//! dumps over JSON request/response endpoints.

mod error;
mod store;

pub use error::ApiError;
pub use store::{Store, StoreError};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use tokio::net::TcpListener;
use xmcts::explain::QuerySubmission;
use xmcts::scenario::Scenario;
use xmcts::session::{ApplyOptions, PlanOptions, Session, SessionEvent, SessionStatus};

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    /// Where `{"scenario_name": ...}` documents are looked up.
    pub scenario_dir: Option<PathBuf>,
    /// Enables write-through persistence of session logs.
    pub store_dir: Option<PathBuf>,
}

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    config: ServiceConfig,
    store: Option<Store>,
    sessions: RwLock<HashMap<String, Shared>>,
}

impl AppState {
    /// Opens the store (if configured) and replays the sessions found there.
    pub fn new(config: ServiceConfig) -> Result<Self, StoreError> {
        let store = config.store_dir.as_deref().map(Store::open).transpose()?;
        let mut sessions = HashMap::new();
        if let Some(store) = &store {
            for (id, session) in store.load_all()? {
                sessions.insert(id, Arc::new(Mutex::new(session)));
            }
        }
        Ok(Self { config, store, sessions: RwLock::new(sessions) })
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }

    fn resolve_scenario(&self, body: &[u8]) -> Result<Scenario, ApiError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Named {
            scenario_name: String,
        }
        let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_body("", "body is not UTF-8"))?;
        let Ok(named) = serde_json::from_str::<Named>(text) else {
            return Ok(Scenario::from_json(text)?);
        };
        let dir = self
            .config
            .scenario_dir
            .as_ref()
            .ok_or_else(|| ApiError::bad_body("scenario_name", "the service has no scenario directory"))?;
        let name = named.scenario_name;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ApiError::bad_body("scenario_name", format!("invalid scenario name '{name}'")));
        }
        let path = dir.join(format!("{name}.json"));
        if !path.is_file() {
            return Err(ApiError::not_found(format!("no scenario named '{name}'")));
        }
        Ok(Scenario::load(&path)?)
    }
}

#[derive(Serialize)]
struct Created {
    id: String,
    epoch: u64,
    status: SessionStatus,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueriesBody {
    #[serde(default)]
    epoch: Option<u64>,
    queries: Vec<QuerySubmission>,
}

/// Parses a JSON body; an empty body means the type's default.
fn parse_body<T: DeserializeOwned + Default>(body: &[u8]) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::bad_body(&path, e.into_inner().to_string())
    })
}

/// Runs `op` on the session off the async runtime, holding its lock so
/// operations on one session are serialized, then persists new log entries.
async fn with_session<T, F>(state: Arc<AppState>, id: String, op: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
{
    let shared = state.session(&id)?;
    tokio::task::spawn_blocking(move || {
        let mut session = shared.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let logged = session.log().len();
        let out = op(&mut session)?;
        if let Some(store) = &state.store {
            store.append(&id, &session.log()[logged..]).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        Ok(out)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let scenario = state.resolve_scenario(&body)?;
    let session = Session::new(scenario.clone())?;
    let id = loop {
        let id = format!("{:016x}", rand::random::<u64>());
        if !state.sessions.read().expect("session map lock").contains_key(&id) {
            break id;
        }
    };
    if let Some(store) = &state.store {
        store.create(&id, &scenario).map_err(|e| ApiError::internal(e.to_string()))?;
    }
    let created = Created { id: id.clone(), epoch: session.epoch(), status: session.status() };
    state.sessions.write().expect("session map lock").insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn plan_epoch(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let options: PlanOptions = parse_body(&body)?;
    with_session(state, id, move |s| Ok(s.dispatch(SessionEvent::Plan { options })?)).await.map(Json)
}

async fn submit_queries(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let QueriesBody { epoch, queries } = parse_required(&body)?;
    with_session(state, id, move |s| Ok(s.dispatch(SessionEvent::Queries { epoch, queries })?)).await.map(Json)
}

async fn apply_recommendation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let options: ApplyOptions = parse_body(&body)?;
    with_session(state, id, move |s| Ok(s.dispatch(SessionEvent::Apply { options })?)).await.map(Json)
}

async fn get_state(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(state, id, |s| Ok(json!(s.state_view()))).await.map(Json)
}

async fn get_tree(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(state, id, |s| Ok(json!(s.tree_dump()?))).await.map(Json)
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/plan", post(plan_epoch))
        .route("/sessions/{id}/queries", post(submit_queries))
        .route("/sessions/{id}/apply", post(apply_recommendation))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/tree", get(get_tree))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
