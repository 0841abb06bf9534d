use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::eval::{eval_predicate, Scene, Window};
use super::frame::{from_secs, to_secs, Micros, PoseFrame, MICROS_PER_S};
use super::RuntimeError;
use crate::dsl::{Expectation, Program};

pub const DEFAULT_POLL_HZ: u32 = 10;
/// Dwell after an announce-only step, seconds.
pub const ANNOUNCE_DWELL_S: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Primary,
    Fallback,
}

/// Sent to the frame source whenever an utterance is delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cue {
    pub step: u32,
    pub at: Micros,
    pub phase: Phase,
}

/// Pull-based pose stream. The runtime never asks for a frame later than
/// the current clock, so a source may react to cues when producing frames.
pub trait FrameSource {
    /// Timestamp of the next frame, `None` once exhausted.
    fn peek_time(&self) -> Option<Micros>;
    fn next_frame(&mut self) -> Option<PoseFrame>;
    fn on_announce(&mut self, _cue: &Cue) {}
}

/// Replays a recorded stream.
#[derive(Debug, Clone, Default)]
pub struct VecSource {
    frames: Vec<PoseFrame>,
    pos: usize,
}

impl VecSource {
    pub fn new(mut frames: Vec<PoseFrame>) -> Self {
        frames.sort_by_key(|f| f.t);
        VecSource { frames, pos: 0 }
    }
}

impl FrameSource for VecSource {
    fn peek_time(&self) -> Option<Micros> {
        self.frames.get(self.pos).map(|f| f.t)
    }

    fn next_frame(&mut self) -> Option<PoseFrame> {
        let f = self.frames.get(self.pos).cloned();
        self.pos += 1;
        f
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionConfig {
    pub poll_hz: u32,
    pub dwell_s: f64,
    /// Copied into the log so a run can be traced to its scenario.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { poll_hz: DEFAULT_POLL_HZ, dwell_s: ANNOUNCE_DWELL_S, seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Announced,
    DetectionTick,
    Completed,
    TimedOut,
    FallbackEngaged,
    Advanced,
    SessionDone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Starts at 1 and has no gaps.
    pub seq: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    /// Session time, seconds.
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepState {
    Announced,
    Monitoring,
    Completed,
    TimedOut,
    FallbackAnnounced,
    FallbackMonitoring,
    FallbackCompleted,
    FallbackTimedOut,
    Advanced,
}

impl StepState {
    /// Edges of the per-step state machine.
    pub fn may_follow(self, prev: StepState) -> bool {
        use StepState::*;
        matches!(
            (prev, self),
            (Announced, Monitoring)
                | (Announced, Advanced)
                | (Monitoring, Completed)
                | (Monitoring, TimedOut)
                | (Completed, Advanced)
                | (TimedOut, Advanced)
                | (TimedOut, FallbackAnnounced)
                | (FallbackAnnounced, FallbackMonitoring)
                | (FallbackMonitoring, FallbackCompleted)
                | (FallbackMonitoring, FallbackTimedOut)
                | (FallbackCompleted, Advanced)
                | (FallbackTimedOut, Advanced)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackLog {
    pub announced_at: f64,
    pub detected_complete: bool,
    #[serde(default)]
    pub detection_at: Option<f64>,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u32,
    pub monitored: bool,
    pub announced_at: f64,
    pub detected_complete: bool,
    #[serde(default)]
    pub detection_at: Option<f64>,
    pub timed_out: bool,
    #[serde(default)]
    pub fallback: Option<FallbackLog>,
    pub advanced_at: f64,
    pub trace: Vec<StepState>,
}

impl StepLog {
    pub fn fallback_engaged(&self) -> bool {
        self.fallback.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub program: String,
    pub poll_hz: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    pub steps: Vec<StepLog>,
    pub ended_at: f64,
}

impl SessionLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,monitored,announced_at,detected_complete,detection_at,timed_out,fallback_engaged,fallback_detected,fallback_detection_at,advanced_at\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.steps {
            let fb = s.fallback.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.step,
                s.monitored,
                s.announced_at,
                s.detected_complete,
                opt(s.detection_at),
                s.timed_out,
                s.fallback_engaged(),
                fb.map(|f| f.detected_complete).unwrap_or(false),
                opt(fb.and_then(|f| f.detection_at)),
                s.advanced_at
            );
        }
        out
    }
}

struct Runner<'a> {
    source: &'a mut dyn FrameSource,
    clock: &'a mut dyn Clock,
    observer: &'a mut dyn FnMut(&SessionEvent),
    scene: Scene,
    poll_hz: i64,
    seq: u64,
    prior: Option<PoseFrame>,
    buf: Vec<PoseFrame>,
    last_t: Option<Micros>,
}

enum Stop {
    Truncated(Micros),
    Err(RuntimeError),
}

impl From<RuntimeError> for Stop {
    fn from(e: RuntimeError) -> Self {
        Stop::Err(e)
    }
}

impl Runner<'_> {
    fn emit(&mut self, kind: EventKind, step: Option<u32>, phase: Option<Phase>) {
        let ev = SessionEvent { seq: self.seq, kind, step, phase, t: to_secs(self.clock.now()) };
        self.seq += 1;
        (self.observer)(&ev);
    }

    fn pull(&mut self, until: Micros) {
        while let Some(t) = self.source.peek_time() {
            if t > until {
                break;
            }
            let Some(f) = self.source.next_frame() else { break };
            self.last_t = Some(f.t);
            self.buf.push(f);
        }
    }

    /// Frames up to `now`, failing if the stream ended before it.
    fn pull_covering(&mut self, now: Micros) -> Result<(), Stop> {
        self.pull(now);
        if self.source.peek_time().is_none() && self.last_t.is_none_or(|t| t < now) {
            return Err(Stop::Truncated(now));
        }
        Ok(())
    }

    fn open_window(&mut self, at: Micros) {
        self.pull(at);
        if let Some(last) = self.buf.pop() {
            self.prior = Some(last);
        }
        self.buf.clear();
    }

    fn announce(&mut self, step: u32, phase: Phase) -> Micros {
        let at = self.clock.now();
        self.open_window(at);
        self.source.on_announce(&Cue { step, at, phase });
        self.emit(EventKind::Announced, Some(step), Some(phase));
        at
    }

    /// Poll until the predicate holds or the expectation times out.
    fn monitor(&mut self, step: u32, phase: Phase, exp: &Expectation, opened: Micros) -> Result<Option<Micros>, Stop> {
        let deadline = opened + from_secs(exp.within_s);
        let mut ticks = 0;
        for k in 1.. {
            let now = opened + k * MICROS_PER_S / self.poll_hz;
            if now > deadline {
                break;
            }
            self.clock.advance_to(now);
            self.pull_covering(now)?;
            let w = Window { opened_at: opened, prior: self.prior.as_ref(), frames: &self.buf };
            if eval_predicate(&exp.pred, &w, now, &self.scene)? {
                self.emit(EventKind::Completed, Some(step), Some(phase));
                return Ok(Some(now));
            }
            while ticks < (now - opened) / MICROS_PER_S {
                ticks += 1;
                self.emit(EventKind::DetectionTick, Some(step), Some(phase));
            }
        }
        self.clock.advance_to(deadline);
        self.emit(EventKind::TimedOut, Some(step), Some(phase));
        Ok(None)
    }
}

/// Deliver a program against a frame stream.
///
/// Every step is announced in order. Monitored steps advance on detection
/// or timeout, with one fallback attempt after a timeout; announce-only
/// steps advance after `cfg.dwell_s`.
pub fn run_session(
    p: &Program,
    source: &mut dyn FrameSource,
    clock: &mut dyn Clock,
    cfg: &SessionConfig,
    observer: &mut dyn FnMut(&SessionEvent),
) -> Result<SessionLog, RuntimeError> {
    if !(1..=60).contains(&cfg.poll_hz) {
        return Err(RuntimeError::BadConfig(format!("poll rate {} Hz is outside 1..=60", cfg.poll_hz)));
    }
    if !(cfg.dwell_s.is_finite() && cfg.dwell_s >= 0.0) {
        return Err(RuntimeError::BadConfig(format!("dwell {} s is not a non-negative duration", cfg.dwell_s)));
    }
    let mut r = Runner {
        source,
        clock,
        observer,
        scene: Scene::of(p),
        poll_hz: cfg.poll_hz as i64,
        seq: 1,
        prior: None,
        buf: Vec::new(),
        last_t: None,
    };
    let mut steps = Vec::with_capacity(p.steps.len());
    let outcome = (|| -> Result<(), Stop> {
        for s in &p.steps {
            let announced = r.announce(s.index, Phase::Primary);
            let mut log = StepLog {
                step: s.index,
                monitored: s.expect.is_some(),
                announced_at: to_secs(announced),
                detected_complete: false,
                detection_at: None,
                timed_out: false,
                fallback: None,
                advanced_at: 0.0,
                trace: vec![StepState::Announced],
            };
            match &s.expect {
                None => {
                    let until = announced + from_secs(cfg.dwell_s);
                    r.clock.advance_to(until);
                    r.pull(until);
                }
                Some(exp) => {
                    log.trace.push(StepState::Monitoring);
                    match r.monitor(s.index, Phase::Primary, exp, announced)? {
                        Some(t) => {
                            log.detected_complete = true;
                            log.detection_at = Some(to_secs(t));
                            log.trace.push(StepState::Completed);
                        }
                        None => {
                            log.timed_out = true;
                            log.trace.push(StepState::TimedOut);
                            if let Some(fb) = &s.fallback {
                                r.emit(EventKind::FallbackEngaged, Some(s.index), Some(Phase::Fallback));
                                let at = r.announce(s.index, Phase::Fallback);
                                log.trace.push(StepState::FallbackAnnounced);
                                log.trace.push(StepState::FallbackMonitoring);
                                let hit = r.monitor(s.index, Phase::Fallback, &fb.expect, at)?;
                                log.trace.push(if hit.is_some() {
                                    StepState::FallbackCompleted
                                } else {
                                    StepState::FallbackTimedOut
                                });
                                log.fallback = Some(FallbackLog {
                                    announced_at: to_secs(at),
                                    detected_complete: hit.is_some(),
                                    detection_at: hit.map(to_secs),
                                    timed_out: hit.is_none(),
                                });
                            }
                        }
                    }
                }
            }
            log.advanced_at = to_secs(r.clock.now());
            log.trace.push(StepState::Advanced);
            r.emit(EventKind::Advanced, Some(s.index), None);
            steps.push(log);
        }
        Ok(())
    })();
    let partial = |steps: Vec<StepLog>, now: Micros| SessionLog {
        program: p.name.clone(),
        poll_hz: cfg.poll_hz,
        seed: cfg.seed,
        steps,
        ended_at: to_secs(now),
    };
    match outcome {
        Ok(()) => {
            r.emit(EventKind::SessionDone, None, None);
            Ok(partial(steps, r.clock.now()))
        }
        Err(Stop::Truncated(at)) => Err(RuntimeError::Truncated { at: to_secs(at), partial: Box::new(partial(steps, at)) }),
        Err(Stop::Err(e)) => Err(e),
    }
}
