//! HTTP endpoints. Bodies are JSON; errors are `{code, message, detail}`.
//! Session events stream as server-sent events: `id` is the sequence
//! number, `event` the kind, `data` one JSON object.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use clinprog_core::dsl::{self, Program};
use clinprog_core::evalstats::{build_report, pair_outcomes, PreLabel};
use clinprog_core::genpipe::{
    assemble_prompt, detect_hallucinated_monitors, generate_program, validate_fidelity, DeterministicBackend,
    GeneratorBackend, Prescription, PromptConfig, ReplayBackend,
};
use clinprog_core::patientsim::Scenario;
use clinprog_core::retrofit::{retrofit_check, TemplateSchema};
use clinprog_core::runtime::{PacingVerdict, SessionLog};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::sessions::{Session, SessionOutcome, Status, StreamEvent, DEFAULT_RT_FACTOR};
use crate::store::{Kind, Record, Store};

pub struct AppState {
    pub store: Arc<Store>,
    pub sessions: RwLock<HashMap<String, Arc<Session>>>,
    pub prompt: PromptConfig,
}

impl AppState {
    pub fn new(store: Store) -> Arc<AppState> {
        Arc::new(AppState { store: Arc::new(store), sessions: RwLock::new(HashMap::new()), prompt: PromptConfig::default() })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session with id {id}")))
    }
}

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/prescriptions", post(post_prescription).get(list_prescriptions))
        .route("/prescriptions/{id}", get(get_prescription))
        .route("/prescriptions/{id}/generate", post(generate))
        .route("/programs", get(list_programs))
        .route("/programs/{id}", get(get_program))
        .route("/programs/{id}/validate", post(validate_program))
        .route("/scenarios", post(post_scenario).get(list_scenarios))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/start", post(start_session))
        .route("/sessions/{id}/events", get(session_events))
        .route("/sessions/{id}/report", get(session_report))
        .route("/eval", post(eval))
        .route("/retrofit", post(retrofit))
        .with_state(state)
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(ApiError::from)
}

fn decode<T: serde::de::DeserializeOwned>(r: &Record) -> ApiResult<T> {
    serde_json::from_value(r.payload.clone())
        .map_err(|e| ApiError::internal(format!("stored {} {} is unreadable: {e}", r.kind.as_str(), r.id)))
}

fn created(r: Record) -> impl IntoResponse {
    (StatusCode::CREATED, Json(r))
}

async fn health(State(s): Shared) -> Json<Value> {
    let counts: serde_json::Map<String, Value> =
        s.store.counts().into_iter().map(|(k, n)| (k.as_str().to_string(), json!(n))).collect();
    let quarantined = s.store.quarantined();
    Json(json!({
        "status": if quarantined.is_empty() { "ok" } else { "degraded" },
        "counts": counts,
        "quarantined": quarantined,
        "sessions": s.sessions.read().expect("sessions lock").len(),
    }))
}

async fn post_prescription(State(s): Shared, b: Result<Json<Prescription>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let rx = body(b)?;
    rx.validate().map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(created(s.store.put(Kind::Prescription, json!(rx))?))
}

async fn list_prescriptions(State(s): Shared) -> Json<Vec<Record>> {
    Json(s.store.list(Kind::Prescription))
}

async fn get_prescription(State(s): Shared, Path(id): Path<String>) -> ApiResult<Json<Record>> {
    Ok(Json(s.store.get(Kind::Prescription, &id)?))
}

/// Stored program: source text plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramPayload {
    pub source: String,
    #[serde(default)]
    pub prescription_id: Option<String>,
    #[serde(default)]
    pub provenance: Value,
    #[serde(default)]
    pub diagnostics: Vec<dsl::Diagnostic>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case", tag = "backend")]
pub enum BackendChoice {
    #[default]
    Deterministic,
    Replay {
        dir: String,
    },
    Remote,
}

async fn generate(
    State(s): Shared,
    Path(id): Path<String>,
    b: Result<Json<BackendChoice>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let choice = body(b)?;
    let rx: Prescription = decode(&s.store.get(Kind::Prescription, &id)?)?;
    let bundle = assemble_prompt(&rx, &s.prompt).map_err(|e| ApiError::invalid(e.to_string()))?;
    let backend: Box<dyn GeneratorBackend + Send> = match choice {
        BackendChoice::Deterministic => Box::new(DeterministicBackend),
        BackendChoice::Replay { dir } => Box::new(ReplayBackend::new(dir)),
        BackendChoice::Remote => Box::new(
            clinprog_core::genpipe::RemoteBackend::from_env()
                .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "generator_unconfigured", e.to_string()))?,
        ),
    };
    let rx2 = rx.clone();
    let (text, prov) = tokio::task::spawn_blocking(move || generate_program(&rx2, &bundle, backend.as_ref()))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, "generation_failed", e.to_string()))?;
    let diagnostics = dsl::parse_program(&text).err().unwrap_or_default();
    let payload = ProgramPayload { source: text, prescription_id: Some(id), provenance: json!(prov), diagnostics };
    Ok(created(s.store.put(Kind::Program, json!(payload))?))
}

async fn list_programs(State(s): Shared) -> Json<Vec<Record>> {
    Json(s.store.list(Kind::Program))
}

async fn get_program(State(s): Shared, Path(id): Path<String>) -> ApiResult<Json<Record>> {
    Ok(Json(s.store.get(Kind::Program, &id)?))
}

fn load_program(s: &AppState, id: &str) -> ApiResult<(ProgramPayload, Result<Program, Vec<dsl::Diagnostic>>)> {
    let payload: ProgramPayload = decode(&s.store.get(Kind::Program, id)?)?;
    let parsed = dsl::parse_program(&payload.source);
    Ok((payload, parsed))
}

async fn validate_program(State(s): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (payload, parsed) = load_program(&s, &id)?;
    let program = match parsed {
        Ok(p) => p,
        Err(diagnostics) => return Ok(Json(json!({ "program_id": id, "valid": false, "diagnostics": diagnostics }))),
    };
    let Some(rx_id) = payload.prescription_id else {
        return Ok(Json(json!({ "program_id": id, "valid": true, "diagnostics": [] })));
    };
    let rx: Prescription = decode(&s.store.get(Kind::Prescription, &rx_id)?)?;
    let fidelity = validate_fidelity(&rx, &program);
    let hallucinations = detect_hallucinated_monitors(&rx, &program);
    Ok(Json(json!({
        "program_id": id,
        "prescription_id": rx_id,
        "valid": true,
        "diagnostics": [],
        "fidelity": fidelity,
        "hallucinations": hallucinations,
    })))
}

async fn post_scenario(State(s): Shared, b: Result<Json<Scenario>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let sc = body(b)?;
    sc.profile.validate().map_err(|e| ApiError::invalid(e.to_string()))?;
    sc.script.validate().map_err(|e| ApiError::invalid(e.to_string()))?;
    sc.noise.validate().map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(created(s.store.put(Kind::Scenario, json!(sc))?))
}

async fn list_scenarios(State(s): Shared) -> Json<Vec<Record>> {
    Json(s.store.list(Kind::Scenario))
}

async fn get_scenario(State(s): Shared, Path(id): Path<String>) -> ApiResult<Json<Record>> {
    Ok(Json(s.store.get(Kind::Scenario, &id)?))
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewSession {
    pub program_id: String,
    pub scenario_id: String,
    #[serde(default)]
    pub rt_factor: Option<f64>,
}

async fn create_session(State(s): Shared, b: Result<Json<NewSession>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let rt = req.rt_factor.unwrap_or(DEFAULT_RT_FACTOR);
    if !(rt.is_finite() && rt > 0.0) {
        return Err(ApiError::bad_request(format!("rt_factor {rt} must be a positive number")));
    }
    let (_, parsed) = load_program(&s, &req.program_id)?;
    let program = parsed.map_err(|d| ApiError::invalid("program does not validate").with_detail(d))?;
    let scenario: Scenario = decode(&s.store.get(Kind::Scenario, &req.scenario_id)?)?;
    let id = ulid::Ulid::new().to_string();
    let session = Session::new(id.clone(), req.program_id, req.scenario_id, rt, program, scenario)
        .map_err(ApiError::invalid)?;
    let view = session.view();
    s.sessions.write().expect("sessions lock").insert(id, Arc::new(session));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(s): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.session(&id)?.view()))
}

async fn start_session(State(s): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let session = s.session(&id)?;
    session
        .begin()
        .map_err(|st| ApiError::conflict("already_started", format!("session {id} is {st:?}")))?;
    let store = s.store.clone();
    let runner = session.clone();
    tokio::task::spawn_blocking(move || runner.execute(&store));
    Ok((StatusCode::ACCEPTED, Json(session.view())))
}

#[derive(Debug, Clone, Deserialize)]
pub struct EventsQuery {
    /// First sequence number wanted; defaults to 1.
    #[serde(default)]
    pub from: Option<u64>,
}

async fn session_events(
    State(s): Shared,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let session = s.session(&id)?;
    let last_seen = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
        .map(|n| n + 1);
    let from = q.from.or(last_seen).unwrap_or(1).max(1);
    let rx = session.subscribe();
    let state = (session, rx, (from - 1) as usize, false);
    let stream = futures::stream::unfold(state, |(session, mut rx, cursor, finished)| async move {
        if finished {
            return None;
        }
        loop {
            rx.borrow_and_update();
            let (events, ended) = session.events_from(cursor);
            if let Some(e) = events.into_iter().next() {
                let ev = Event::default()
                    .id(e.seq.to_string())
                    .event(kind_name(&e))
                    .json_data(StreamEvent { session: session.id.clone(), event: e })
                    .expect("events serialize");
                return Some((Ok(ev), (session, rx, cursor + 1, false)));
            }
            if ended {
                let last = match session.error() {
                    Some(msg) => Event::default().event("error").json_data(json!({ "message": msg })),
                    None => Event::default().event("end").json_data(json!({ "session": session.id })),
                }
                .expect("json");
                return Some((Ok(last), (session, rx, cursor, true)));
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

fn kind_name(e: &clinprog_core::runtime::SessionEvent) -> String {
    serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

async fn session_report(State(s): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = s.session(&id)?;
    let view = session.view();
    match view.status {
        Status::Done => {
            let outcome = session.outcome().expect("done sessions have an outcome");
            Ok(Json(json!({ "session": view, "outcome": outcome })))
        }
        Status::Failed => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "session_failed", "session failed")
            .with_detail(json!({ "error": view.error }))),
        _ => Err(ApiError::conflict("session_not_finished", format!("session {id} is {:?}", view.status))),
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvalRequest {
    pub sessions: Vec<String>,
    pub prelabels: Vec<PreLabel>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

/// Finished session by live id, falling back to the stored logs.
fn finished_outcome(s: &AppState, id: &str) -> ApiResult<SessionOutcome> {
    if let Ok(sess) = s.session(id) {
        return sess
            .outcome()
            .ok_or_else(|| ApiError::conflict("session_not_finished", format!("session {id} has no log yet")));
    }
    s.store
        .list(Kind::SessionLog)
        .iter()
        .filter_map(|r| serde_json::from_value::<SessionOutcome>(r.payload.clone()).ok())
        .find(|o| o.session_id == id)
        .ok_or_else(|| ApiError::not_found(format!("no session with id {id}")))
}

async fn eval(State(s): Shared, b: Result<Json<EvalRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let gamma = req.gamma.unwrap_or(0.95);
    let mut logs: Vec<(String, SessionLog)> = Vec::new();
    let mut pacing: Vec<PacingVerdict> = Vec::new();
    let mut hallucinations: HashMap<(String, u32), usize> = HashMap::new();
    for id in &req.sessions {
        let o = finished_outcome(&s, id)?;
        pacing.extend(o.pacing.iter().map(|e| e.verdict));
        let (payload, parsed) = load_program(&s, &o.program_id)?;
        if let (Some(rx_id), Ok(p)) = (payload.prescription_id, parsed) {
            if let Ok(r) = s.store.get(Kind::Prescription, &rx_id) {
                let rx: Prescription = decode(&r)?;
                for f in detect_hallucinated_monitors(&rx, &p) {
                    *hallucinations.entry((id.clone(), f.step)).or_default() += 1;
                }
            }
        }
        logs.push((id.clone(), o.log));
    }
    let mut outcomes = pair_outcomes(&req.prelabels, &logs).map_err(|e| ApiError::invalid(e.to_string()))?;
    for o in &mut outcomes {
        o.hallucinations = hallucinations.get(&(o.session.clone(), o.step)).copied().unwrap_or(0);
    }
    let report = build_report(&outcomes, &pacing, gamma).map_err(|e| ApiError::invalid(e.to_string()))?;
    let record = s.store.put(
        Kind::EvalReport,
        json!({ "sessions": req.sessions, "report": report, "text": report.to_text(), "outcomes": outcomes }),
    )?;
    Ok(created(record))
}

#[derive(Debug, Clone, Deserialize)]
pub struct RetrofitRequest {
    pub prescription_id: String,
    /// Goal number of a bundled template, as a number or a string such as
    /// `"3"` or `"goal-3"`.
    pub template_id: Value,
}

fn template_for(id: &Value) -> ApiResult<TemplateSchema> {
    let goal = match id {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim_start_matches(|c: char| !c.is_ascii_digit()).parse().ok(),
        _ => None,
    };
    goal.and_then(|g| u8::try_from(g).ok())
        .and_then(clinprog_core::fixtures::template)
        .ok_or_else(|| ApiError::not_found(format!("no template {id}")))
}

async fn retrofit(State(s): Shared, b: Result<Json<RetrofitRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let rx: Prescription = decode(&s.store.get(Kind::Prescription, &req.prescription_id)?)?;
    let t = template_for(&req.template_id)?;
    let verdict = retrofit_check(&rx, &t);
    let record = s.store.put(
        Kind::Verdict,
        json!({ "prescription_id": req.prescription_id, "template_goal": t.goal_id, "verdict": verdict }),
    )?;
    Ok(created(record))
}

/// Serve until Ctrl-C.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
