//! HTTP/JSON service over a store of scenarios.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use bizvor_core::business_map::PreferenceTable;
use bizvor_core::geometry::Point2;
use bizvor_core::network::{NetworkError, Partner, PartnerId};
use bizvor_core::registry::Strategies;
use bizvor_core::scenario::{
    apply_whatif, project_whatif, save_scenario, ForceView, LogEntry, MapView, Scenario, ScenarioError, WhatIf,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Largest tick count a single step request may ask for.
pub const MAX_STEP_TICKS: u64 = 10_000;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub path: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            path: None,
        }
    }

    fn invalid(path: &str, message: impl Into<String>) -> Self {
        ApiError {
            path: Some(path.into()),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message)
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let status = match &e {
            ScenarioError::Network(NetworkError::UnknownPartner(_)) => StatusCode::NOT_FOUND,
            ScenarioError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        ScenarioError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let kind = match self.status {
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::UNPROCESSABLE_ENTITY => "validation",
            _ => "internal",
        };
        let body = json!({ "error": kind, "message": self.message, "path": self.path });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Deserializes a request body, reporting the first offending field.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "body".to_string() } else { path };
        ApiError::invalid(&path, e.into_inner().to_string())
    })
}

fn finite(path: &str, v: f64) -> Result<f64, ApiError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ApiError::invalid(path, "must be a finite number"))
    }
}

struct Pending {
    action: WhatIf,
    revision: u64,
}

struct Slot {
    scenario: Scenario,
    /// Bumped by every committed mutation.
    revision: u64,
    pending: HashMap<String, Pending>,
    next_token: u64,
    path: Option<PathBuf>,
}

impl Slot {
    /// Refuses a mutation whose `If-Match` names a stale revision.
    fn check(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        let Some(raw) = headers.get("if-match") else {
            return Ok(());
        };
        let text = raw.to_str().unwrap_or_default().trim().trim_matches('"');
        let expected: u64 = text
            .parse()
            .map_err(|_| ApiError::invalid("If-Match", format!("expected a revision number, got {text:?}")))?;
        if expected != self.revision {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("scenario is at revision {}, request expected {expected}", self.revision),
            ));
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<u64, ApiError> {
        self.revision += 1;
        self.pending.retain(|_, p| p.revision == self.revision);
        if let Some(path) = &self.path {
            save_scenario(&self.scenario, path)?;
        }
        Ok(self.revision)
    }
}

/// Scenarios served by the API, each behind its own writer lock.
#[derive(Clone, Default)]
pub struct Store {
    slots: Arc<BTreeMap<String, Mutex<Slot>>>,
    strategies: Arc<Strategies>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    /// Adds a scenario under `id`; when `path` is set every committed
    /// mutation is written back to it.
    pub fn with(mut self, id: impl Into<String>, scenario: Scenario, path: Option<PathBuf>) -> Self {
        let slots = Arc::get_mut(&mut self.slots).expect("store is not shared yet");
        slots.insert(
            id.into(),
            Mutex::new(Slot {
                scenario,
                revision: 0,
                pending: HashMap::new(),
                next_token: 1,
                path,
            }),
        );
        self
    }

    fn slot(&self, id: &str) -> Result<MutexGuard<'_, Slot>, ApiError> {
        let slot = self
            .slots
            .get(id)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scenario {id:?}")))?;
        Ok(slot.lock().unwrap_or_else(|e| e.into_inner()))
    }

    /// Snapshot of a scenario at its current revision.
    pub fn snapshot(&self, id: &str) -> Option<(Scenario, u64)> {
        let slot = self.slot(id).ok()?;
        Some((slot.scenario.clone(), slot.revision))
    }
}

#[derive(Serialize)]
struct Summary {
    id: String,
    name: String,
    tick: u64,
    partners: usize,
    revision: u64,
    hash: String,
}

async fn list(State(store): State<Store>) -> ApiResult<Vec<Summary>> {
    let mut out = Vec::new();
    for id in store.slots.keys() {
        let slot = store.slot(id)?;
        out.push(Summary {
            id: id.clone(),
            name: slot.scenario.name.clone(),
            tick: slot.scenario.tick,
            partners: slot.scenario.network.len(),
            revision: slot.revision,
            hash: slot.scenario.hash(),
        });
    }
    Ok(Json(out))
}

#[derive(Serialize)]
struct MapResponse {
    revision: u64,
    hash: String,
    #[serde(flatten)]
    map: MapView,
}

async fn map(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<MapResponse> {
    let slot = store.slot(&id)?;
    Ok(Json(MapResponse {
        revision: slot.revision,
        hash: slot.scenario.hash(),
        map: MapView::of(&slot.scenario)?,
    }))
}

async fn hash(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Value> {
    let slot = store.slot(&id)?;
    Ok(Json(json!({ "revision": slot.revision, "hash": slot.scenario.hash() })))
}

async fn kpis(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let slot = store.slot(&id)?;
    let report = slot.scenario.kpis()?;
    Ok(Json(json!({ "revision": slot.revision, "kpis": report })))
}

async fn events(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Vec<LogEntry>> {
    let slot = store.slot(&id)?;
    Ok(Json(slot.scenario.events.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    ticks: u64,
}

#[derive(Serialize)]
struct StepResponse {
    revision: u64,
    tick: u64,
    events: Vec<LogEntry>,
}

async fn step(State(store): State<Store>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult<StepResponse> {
    let StepBody { ticks } = parse(&body)?;
    if ticks == 0 || ticks > MAX_STEP_TICKS {
        return Err(ApiError::invalid("ticks", format!("must be between 1 and {MAX_STEP_TICKS}")));
    }
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let first = slot.scenario.events.len();
    slot.scenario.evolve(ticks, &store.strategies)?;
    let events = slot.scenario.events[first..].to_vec();
    let revision = slot.commit()?;
    Ok(Json(StepResponse {
        revision,
        tick: slot.scenario.tick,
        events,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InsertBody {
    #[serde(default)]
    name: Option<String>,
    region: String,
    goals: Vec<String>,
    #[serde(default)]
    footprint: BTreeMap<String, f64>,
    #[serde(default)]
    competitor_history: bool,
    x: f64,
    y: f64,
}

async fn insert(State(store): State<Store>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let b: InsertBody = parse(&body)?;
    let at = Point2::new(finite("x", b.x)?, finite("y", b.y)?);
    let mut partner = Partner::new(0, b.region).with_goals(b.goals).with_footprint(b.footprint);
    partner.competitor_history = b.competitor_history;
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let (pid, seq) = slot.scenario.add_partner(partner, at)?;
    if let Some(name) = b.name {
        slot.scenario.network.partner_mut(pid)?.name = name;
    }
    let revision = slot.commit()?;
    Ok((StatusCode::CREATED, Json(json!({ "revision": revision, "partner": pid, "seq": seq }))).into_response())
}

async fn remove(
    State(store): State<Store>,
    Path((id, pid)): Path<(String, PartnerId)>,
    headers: HeaderMap,
) -> ApiResult<Value> {
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let seq = slot.scenario.remove_partner(pid)?;
    let revision = slot.commit()?;
    Ok(Json(json!({ "revision": revision, "seq": seq })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveBody {
    x: f64,
    y: f64,
}

async fn move_partner(
    State(store): State<Store>,
    Path((id, pid)): Path<(String, PartnerId)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Value> {
    let b: MoveBody = parse(&body)?;
    let target = Point2::new(finite("x", b.x)?, finite("y", b.y)?);
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let (trace, seq) = slot.scenario.move_partner(pid, target)?;
    let revision = slot.commit()?;
    Ok(Json(json!({ "revision": revision, "seq": seq, "trace": trace })))
}

async fn tables(State(store): State<Store>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Value> {
    let table: PreferenceTable = parse(&body)?;
    for (i, row) in table.rows.iter().enumerate() {
        finite(&format!("rows[{i}].weight"), row.weight)?;
    }
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let seq = slot.scenario.replace_table(table)?;
    let forces: Vec<ForceView> = slot
        .scenario
        .network
        .forces()
        .into_iter()
        .map(|((a, b), force)| ForceView { a, b, force })
        .collect();
    let revision = slot.commit()?;
    Ok(Json(json!({ "revision": revision, "seq": seq, "forces": forces })))
}

async fn whatif(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Value> {
    let action: WhatIf = parse(&body)?;
    if let WhatIf::Entrust { attributes, .. } = &action {
        for (k, &v) in attributes {
            finite(&format!("attributes.{k}"), v)?;
        }
    }
    let mut slot = store.slot(&id)?;
    let projection = project_whatif(&slot.scenario, &action)?;
    let token = format!("w{}-{}", slot.revision, slot.next_token);
    slot.next_token += 1;
    let revision = slot.revision;
    slot.pending.insert(token.clone(), Pending { action, revision });
    Ok(Json(json!({ "revision": revision, "token": token, "projection": projection })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitBody {
    token: String,
}

async fn commit(State(store): State<Store>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Value> {
    let CommitBody { token } = parse(&body)?;
    let mut slot = store.slot(&id)?;
    slot.check(&headers)?;
    let pending = slot
        .pending
        .remove(&token)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown or expired token {token:?}")))?;
    if pending.revision != slot.revision {
        return Err(ApiError::new(StatusCode::CONFLICT, "scenario changed since the projection"));
    }
    apply_whatif(&mut slot.scenario, &pending.action)?;
    let seq = slot.scenario.events.last().map_or(0, |e| e.seq);
    let revision = slot.commit()?;
    Ok(Json(json!({ "revision": revision, "seq": seq, "action": pending.action })))
}

async fn cancel(State(store): State<Store>, Path((id, token)): Path<(String, String)>) -> Result<StatusCode, ApiError> {
    let mut slot = store.slot(&id)?;
    match slot.pending.remove(&token) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown or expired token {token:?}"))),
    }
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/scenarios", get(list))
        .route("/scenarios/{id}/map", get(map))
        .route("/scenarios/{id}/hash", get(hash))
        .route("/scenarios/{id}/kpis", get(kpis))
        .route("/scenarios/{id}/events", get(events))
        .route("/scenarios/{id}/step", post(step))
        .route("/scenarios/{id}/partners", post(insert))
        .route("/scenarios/{id}/partners/{pid}", delete(remove))
        .route("/scenarios/{id}/partners/{pid}/move", post(move_partner))
        .route("/scenarios/{id}/tables", put(tables))
        .route("/scenarios/{id}/whatif", post(whatif))
        .route("/scenarios/{id}/whatif/{token}", delete(cancel))
        .route("/scenarios/{id}/commit", post(commit))
        .with_state(store)
}

pub async fn serve(store: Store, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
