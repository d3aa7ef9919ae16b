//! HTTP sessions over the pipeline: each session owns a world state, turns
//! commands into plans and executes them one action at a time.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::frontend::ContextualQuery;
use crate::grounding::{label_state, GroundingLexicon, PropRegistry};
use crate::ltl::LtlFormula;
use crate::pipeline::{ground_command, ErrorBody, PipelineError, PipelineOptions};
use crate::planner::{plan, progress, PlanOptions};
use crate::template::TemplateLibrary;
use crate::world::{
    state_digest, transition, Action, ContainerLocation, ToyLocation, ToyState, WorldConfig,
};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);
/// Product size limit for plans requested over HTTP.
pub const SERVICE_PRODUCT_CAP: usize = 200_000;

/// A world a session can be opened on.
pub struct WorldEntry {
    pub world: WorldConfig,
    pub lexicon: GroundingLexicon,
    pub registry: PropRegistry,
}

impl WorldEntry {
    pub fn new(
        world: WorldConfig,
        lexicon: GroundingLexicon,
    ) -> Result<Self, crate::grounding::GroundingError> {
        world.validate()?;
        lexicon.check_against(&world)?;
        let registry = PropRegistry::build(&world)?;
        Ok(WorldEntry {
            world,
            lexicon,
            registry,
        })
    }
}

pub struct ServiceConfig {
    pub worlds: BTreeMap<String, WorldEntry>,
    /// World used when a session request names none.
    pub default_world: String,
    pub library: TemplateLibrary,
    pub idle_timeout: Duration,
    pub plan_options: PlanOptions,
}

impl ServiceConfig {
    pub fn new(default_world: String, entry: WorldEntry, library: TemplateLibrary) -> Self {
        ServiceConfig {
            worlds: BTreeMap::from([(default_world.clone(), entry)]),
            default_world,
            library,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            plan_options: PlanOptions {
                state_cap: SERVICE_PRODUCT_CAP,
                ..PlanOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryEntry {
    pub text: String,
    pub cq: Option<ContextualQuery>,
    pub ltl: Option<String>,
    pub outcome: String,
}

struct PendingPlan {
    actions: Vec<Action>,
    cursor: usize,
    spec: LtlFormula,
}

struct Session {
    world_id: String,
    current: ToyState,
    pending: Option<PendingPlan>,
    history: Vec<HistoryEntry>,
    last_used: Instant,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: std::sync::Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            sessions: std::sync::Mutex::new(HashMap::new()),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table").len()
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub async fn evict_idle(&self, now: Instant) -> usize {
        let entries: Vec<(String, Arc<Mutex<Session>>)> = self
            .sessions
            .lock()
            .expect("session table")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut stale = Vec::new();
        for (id, s) in entries {
            if let Ok(s) = s.try_lock() {
                if now.saturating_duration_since(s.last_used) > self.config.idle_timeout {
                    stale.push(id);
                }
            }
        }
        let mut table = self.sessions.lock().expect("session table");
        for id in &stale {
            table.remove(id);
        }
        stale.len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "UnknownSession",
                    format!("no session `{id}`"),
                )
            })
    }

    fn entry(&self, world_id: &str) -> &WorldEntry {
        &self.config.worlds[world_id]
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                kind: kind.into(),
                detail: detail.into(),
            },
        }
    }

    fn malformed(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MalformedBody", detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellView {
    pub index: usize,
    pub x: usize,
    pub y: usize,
    pub rooms: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityView {
    pub id: String,
    pub name: String,
    /// `cell`, `held` or `in_container`.
    pub placement: String,
    pub cell: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

/// World state as sent to clients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateView {
    pub world_id: String,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<CellView>,
    pub agent_cell: usize,
    pub holding: Option<String>,
    pub toys: Vec<EntityView>,
    pub containers: Vec<EntityView>,
    pub propositions: Vec<String>,
    pub digest: String,
}

pub fn render_state(world_id: &str, reg: &PropRegistry, s: &ToyState) -> StateView {
    let w = reg.world();
    let cells = (0..w.cell_count())
        .map(|index| CellView {
            index,
            x: index % w.grid_width,
            y: index / w.grid_width,
            rooms: w
                .rooms
                .iter()
                .filter(|r| r.cells.contains(&index))
                .map(|r| r.name.clone().unwrap_or_else(|| r.id.clone()))
                .collect(),
        })
        .collect();
    let toys = w
        .toys
        .iter()
        .zip(&s.toy_location)
        .map(|(t, loc)| {
            let (placement, container) = match loc {
                ToyLocation::Cell(_) => ("cell", None),
                ToyLocation::HeldByAgent => ("held", None),
                ToyLocation::InContainer(k) => ("in_container", Some(w.containers[*k].id.clone())),
            };
            EntityView {
                id: t.id.clone(),
                name: t.name.clone().unwrap_or_else(|| t.id.clone()),
                placement: placement.into(),
                cell: w.entity_cell(s, &t.id).unwrap_or(s.agent_cell),
                container,
                shape: Some(t.shape.clone()),
                color: Some(t.color.clone()),
            }
        })
        .collect();
    let containers = w
        .containers
        .iter()
        .zip(&s.box_location)
        .map(|(c, loc)| EntityView {
            id: c.id.clone(),
            name: c.name.clone().unwrap_or_else(|| c.id.clone()),
            placement: match loc {
                ContainerLocation::Cell(_) => "cell",
                ContainerLocation::HeldByAgent => "held",
            }
            .into(),
            cell: w.entity_cell(s, &c.id).unwrap_or(s.agent_cell),
            container: None,
            shape: None,
            color: None,
        })
        .collect();
    StateView {
        world_id: world_id.into(),
        width: w.grid_width,
        height: w.grid_height,
        cells,
        agent_cell: s.agent_cell,
        holding: w.held_entity(s).map(str::to_string),
        toys,
        containers,
        propositions: label_state(reg, s)
            .map(|l| l.into_iter().collect())
            .unwrap_or_default(),
        digest: state_digest(w, s),
    }
}

#[derive(Debug, Default, Deserialize)]
struct CreateRequest {
    world_id: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct CommandRequest {
    text: Option<String>,
    pos_disambiguation: Option<bool>,
    tagger_fault: Option<bool>,
}

/// Body of a command response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    pub cq: Option<ContextualQuery>,
    pub ltl: Option<String>,
    pub plan: Vec<String>,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let world_id = req
        .world_id
        .unwrap_or_else(|| app.config.default_world.clone());
    let Some(entry) = app.config.worlds.get(&world_id) else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownWorld",
            format!("no world `{world_id}`"),
        ));
    };
    let id = uuid::Uuid::new_v4().to_string();
    let current = entry.world.initial_state();
    let state = render_state(&world_id, &entry.registry, &current);
    let session = Session {
        world_id,
        current,
        pending: None,
        history: Vec::new(),
        last_used: Instant::now(),
    };
    app.sessions
        .lock()
        .expect("session table")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(json!({"session_id": id, "state": state})))
}

async fn get_state(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let mut s = session.lock().await;
    s.last_used = Instant::now();
    let entry = app.entry(&s.world_id);
    let state = render_state(&s.world_id, &entry.registry, &s.current);
    let remaining = s.pending.as_ref().map(|p| p.actions.len() - p.cursor);
    Ok(Json(json!({
        "session_id": id,
        "state": state,
        "remaining_actions": remaining,
        "history": s.history,
    })))
}

async fn command(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<CommandResponse>, ApiError> {
    let req: CommandRequest = parse_body(&body)?;
    let text = req
        .text
        .ok_or_else(|| ApiError::malformed("missing field `text`"))?;
    let opts = PipelineOptions {
        pos_disambiguation: req.pos_disambiguation.unwrap_or(true),
        tagger_fault: req.tagger_fault.unwrap_or(false),
    };
    let session = app.session(&id)?;
    let mut s = session.lock().await;
    s.last_used = Instant::now();

    let worker_app = app.clone();
    let world_id = s.world_id.clone();
    let start = s.current.clone();
    let worker_text = text.clone();
    let (outcome, planned) = tokio::task::spawn_blocking(move || {
        let entry = worker_app.entry(&world_id);
        let cfg = &worker_app.config;
        let outcome = ground_command(
            &worker_text,
            &cfg.library,
            &entry.lexicon,
            &entry.registry,
            opts,
        );
        let planned = outcome.ltl.as_ref().map(|f| {
            plan(&entry.registry, &start, f, &cfg.plan_options)
                .map(|p| (p.actions, f.clone()))
                .map_err(PipelineError::from)
        });
        (outcome, planned)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;

    let ltl = outcome.ltl.as_ref().map(|f| f.to_string());
    let mut response = CommandResponse {
        cq: outcome.cq.clone(),
        ltl: ltl.clone(),
        plan: Vec::new(),
        accepted: false,
        error: outcome.error.as_ref().map(PipelineError::body),
    };
    s.pending = None;
    match planned {
        Some(Ok((actions, spec))) => {
            response.plan = actions.iter().map(Action::to_string).collect();
            response.accepted = true;
            let entry = app.entry(&s.world_id);
            let spec = label_state(&entry.registry, &s.current)
                .map(|l| progress(&spec, &l))
                .unwrap_or(spec);
            s.pending = Some(PendingPlan {
                actions,
                cursor: 0,
                spec,
            });
        }
        Some(Err(e)) => response.error = Some(e.body()),
        None => {}
    }
    let outcome_text = match &response.error {
        Some(e) => e.kind.clone(),
        None => format!("planned {} actions", response.plan.len()),
    };
    s.history.push(HistoryEntry {
        text,
        cq: response.cq.clone(),
        ltl,
        outcome: outcome_text,
    });
    Ok(Json(response))
}

async fn step(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let mut guard = session.lock().await;
    let s = &mut *guard;
    s.last_used = Instant::now();
    let entry = app.entry(&s.world_id);
    let Some(pending) = s.pending.as_mut().filter(|p| p.cursor < p.actions.len()) else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "PlanExhausted",
            "no plan actions left to execute",
        ));
    };
    let action = pending.actions[pending.cursor].clone();
    let next = transition(&entry.world, &s.current, &action).map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InvalidState",
            e.to_string(),
        )
    })?;
    let labels = label_state(&entry.registry, &next).map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InvalidState",
            e.to_string(),
        )
    })?;
    pending.spec = progress(&pending.spec, &labels);
    pending.cursor += 1;
    let remaining = pending.actions.len() - pending.cursor;
    let spec = pending.spec.to_string();
    let accepted = pending.spec.is_true();
    s.current = next;
    Ok(Json(json!({
        "action": action.to_string(),
        "state": render_state(&s.world_id, &entry.registry, &s.current),
        "remaining_spec": spec,
        "remaining_actions": remaining,
        "accepted": accepted,
    })))
}

async fn reset(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let mut s = session.lock().await;
    s.last_used = Instant::now();
    let entry = app.entry(&s.world_id);
    s.current = entry.world.initial_state();
    s.pending = None;
    s.history.clear();
    Ok(Json(json!({
        "session_id": id,
        "state": render_state(&s.world_id, &entry.registry, &s.current),
    })))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/command", post(command))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/reset", post(reset))
        .with_state(app)
}

/// Serves until the process is stopped, evicting idle sessions once a
/// minute.
pub async fn serve(config: ServiceConfig, port: u16) -> std::io::Result<()> {
    let app = AppState::new(config);
    let sweeper = app.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.evict_idle(Instant::now()).await;
        }
    });
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app)).await
}
