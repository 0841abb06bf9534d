//! Live sessions: one executor thread each, with an append-only event
//! backlog that any number of subscribers can read from any position.

use std::sync::{Arc, Mutex};

use clinprog_core::dsl::Program;
use clinprog_core::patientsim::{Scenario, SimulatedPatient};
use clinprog_core::runtime::{
    assess_pacing, run_session, EventKind, PacingEntry, SessionConfig, SessionEvent, SessionLog, StepTruth,
    DELAY_THRESHOLD_S,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::watch;

use crate::clock::PacedClock;
use crate::store::{Kind, Store};

pub const DEFAULT_RT_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Created,
    Running,
    Done,
    Failed,
}

/// One event as sent to subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub session: String,
    #[serde(flatten)]
    pub event: SessionEvent,
}

/// What a finished session leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub session_id: String,
    pub program_id: String,
    pub scenario_id: String,
    pub rt_factor: f64,
    pub log: SessionLog,
    pub truth: Vec<StepTruth>,
    pub pacing: Vec<PacingEntry>,
}

#[derive(Debug)]
struct Inner {
    status: Status,
    events: Vec<SessionEvent>,
    outcome: Option<SessionOutcome>,
    log_record: Option<String>,
    error: Option<String>,
    patient: Option<SimulatedPatient>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub program_id: String,
    pub scenario_id: String,
    pub rt_factor: f64,
    program: Program,
    scenario: Scenario,
    inner: Mutex<Inner>,
    /// Bumped after every change a subscriber could care about.
    changed: watch::Sender<u64>,
}

/// Snapshot of a session for the status and report endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub program_id: String,
    pub scenario_id: String,
    pub rt_factor: f64,
    pub status: Status,
    pub events: usize,
    #[serde(default)]
    pub log_record: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl Session {
    /// Builds the simulated patient up front so bad scenarios fail here.
    pub fn new(
        id: String,
        program_id: String,
        scenario_id: String,
        rt_factor: f64,
        program: Program,
        scenario: Scenario,
    ) -> Result<Session, String> {
        let patient = scenario.patient(&program).map_err(|e| e.to_string())?;
        Ok(Session {
            id,
            program_id,
            scenario_id,
            rt_factor,
            program,
            scenario,
            inner: Mutex::new(Inner {
                status: Status::Created,
                events: Vec::new(),
                outcome: None,
                log_record: None,
                error: None,
                patient: Some(patient),
            }),
            changed: watch::channel(0).0,
        })
    }

    pub fn view(&self) -> SessionView {
        let g = self.inner.lock().expect("session lock");
        SessionView {
            id: self.id.clone(),
            program_id: self.program_id.clone(),
            scenario_id: self.scenario_id.clone(),
            rt_factor: self.rt_factor,
            status: g.status,
            events: g.events.len(),
            log_record: g.log_record.clone(),
            error: g.error.clone(),
        }
    }

    pub fn status(&self) -> Status {
        self.inner.lock().expect("session lock").status
    }

    pub fn outcome(&self) -> Option<SessionOutcome> {
        self.inner.lock().expect("session lock").outcome.clone()
    }

    /// Events from position `from` (0-based) on, and whether the stream has
    /// ended after them.
    pub fn events_from(&self, from: usize) -> (Vec<SessionEvent>, bool) {
        let g = self.inner.lock().expect("session lock");
        let evs = g.events.get(from..).map(<[_]>::to_vec).unwrap_or_default();
        let ended = matches!(g.status, Status::Done | Status::Failed);
        (evs, ended)
    }

    pub fn error(&self) -> Option<String> {
        self.inner.lock().expect("session lock").error.clone()
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.changed.subscribe()
    }

    fn bump(&self) {
        self.changed.send_modify(|n| *n += 1);
    }

    fn push(&self, e: &SessionEvent) {
        self.inner.lock().expect("session lock").events.push(e.clone());
        self.bump();
    }

    /// Claim the session for execution. Fails if it already started.
    pub fn begin(&self) -> Result<(), Status> {
        let mut g = self.inner.lock().expect("session lock");
        if g.status != Status::Created {
            return Err(g.status);
        }
        g.status = Status::Running;
        drop(g);
        self.bump();
        Ok(())
    }

    /// Execute to the end on the calling thread, then persist the log.
    pub fn execute(self: &Arc<Self>, store: &Store) {
        let mut patient = self.inner.lock().expect("session lock").patient.take().expect("patient is set until start");
        let mut clock = PacedClock::new(self.rt_factor);
        let cfg = SessionConfig { poll_hz: self.scenario.noise.poll_hz, seed: Some(self.scenario.noise.seed), ..Default::default() };
        let result = run_session(&self.program, &mut patient, &mut clock, &cfg, &mut |e| self.push(e));
        let mut g = self.inner.lock().expect("session lock");
        match result {
            Ok(log) => {
                let outcome = SessionOutcome {
                    session_id: self.id.clone(),
                    program_id: self.program_id.clone(),
                    scenario_id: self.scenario_id.clone(),
                    rt_factor: self.rt_factor,
                    pacing: assess_pacing(&log, patient.truth(), DELAY_THRESHOLD_S),
                    truth: patient.truth().to_vec(),
                    log,
                };
                match store.put(Kind::SessionLog, json!(outcome)) {
                    Ok(r) => {
                        g.log_record = Some(r.id);
                        g.status = Status::Done;
                    }
                    Err(e) => {
                        g.error = Some(e.to_string());
                        g.status = Status::Failed;
                    }
                }
                g.outcome = Some(outcome);
            }
            Err(e) => {
                g.error = Some(e.to_string());
                g.status = Status::Failed;
            }
        }
        drop(g);
        self.bump();
    }
}

/// True if the backlog is a gapless run from 1 that ends in one
/// `SessionDone`.
pub fn is_complete_stream(events: &[SessionEvent]) -> bool {
    events.iter().enumerate().all(|(i, e)| e.seq == i as u64 + 1)
        && events.iter().filter(|e| e.kind == EventKind::SessionDone).count() == 1
        && events.last().is_some_and(|e| e.kind == EventKind::SessionDone)
}
