use serde::{Deserialize, Serialize};

use super::session::SessionLog;

/// Lag, in seconds, past true completion after which an advance is late.
pub const DELAY_THRESHOLD_S: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacingVerdict {
    Adequate,
    Premature,
    Delayed,
}

/// When a step's movement was really finished; `None` if it never was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTruth {
    pub step: u32,
    pub completed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacingEntry {
    pub step: u32,
    pub verdict: PacingVerdict,
    pub advanced_at: f64,
    #[serde(default)]
    pub completed_at: Option<f64>,
}

pub fn pacing_verdict(advanced_at: f64, completed_at: Option<f64>, threshold_s: f64) -> PacingVerdict {
    match completed_at {
        Some(t) if advanced_at < t => PacingVerdict::Premature,
        Some(t) if advanced_at - t > threshold_s => PacingVerdict::Delayed,
        Some(_) => PacingVerdict::Adequate,
        None => PacingVerdict::Premature,
    }
}

/// Judge every monitored step of `log` that has a truth entry. A step whose
/// movement never happened is premature iff the runtime moved on before its
/// timeout ran out, which it can only do after a detection.
pub fn assess_pacing(log: &SessionLog, truth: &[StepTruth], threshold_s: f64) -> Vec<PacingEntry> {
    let mut out = Vec::new();
    for s in log.steps.iter().filter(|s| s.monitored) {
        let Some(t) = truth.iter().find(|t| t.step == s.step) else { continue };
        let verdict = match t.completed_at {
            Some(_) => pacing_verdict(s.advanced_at, t.completed_at, threshold_s),
            None if s.detected_complete || s.fallback.as_ref().is_some_and(|f| f.detected_complete) => {
                PacingVerdict::Premature
            }
            None => PacingVerdict::Adequate,
        };
        out.push(PacingEntry { step: s.step, verdict, advanced_at: s.advanced_at, completed_at: t.completed_at });
    }
    out
}
