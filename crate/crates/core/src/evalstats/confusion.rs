use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::patientsim::Expected;
use crate::runtime::SessionLog;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreLabel {
    pub session: String,
    pub step: u32,
    pub expected: Expected,
}

/// Positive class is a completed movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn add(&mut self, expected: Expected, detected: bool) {
        match (expected, detected) {
            (Expected::ShouldComplete, true) => self.tp += 1,
            (Expected::ShouldComplete, false) => self.fn_ += 1,
            (Expected::ShouldNotComplete, false) => self.tn += 1,
            (Expected::ShouldNotComplete, true) => self.fp += 1,
        }
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.n() as f64
    }

    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }
}

/// One labelled monitored step and what the runtime made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub session: String,
    pub step: u32,
    pub expected: Expected,
    pub detected: bool,
    /// Hallucination findings on this step's monitor.
    #[serde(default)]
    pub hallucinations: usize,
}

impl StepOutcome {
    pub fn is_correct(&self) -> bool {
        self.detected == (self.expected == Expected::ShouldComplete)
    }
}

/// Join labels to logged steps. A step counts as detected when either its
/// primary or its fallback monitor fired.
pub fn pair_outcomes(labels: &[PreLabel], logs: &[(String, SessionLog)]) -> Result<Vec<StepOutcome>, StatsError> {
    let by_id: HashMap<&str, &SessionLog> = logs.iter().map(|(id, l)| (id.as_str(), l)).collect();
    let mut out = Vec::with_capacity(labels.len());
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        let unmatched = || StatsError::Pairing { session: l.session.clone(), step: l.step };
        if !seen.insert((l.session.as_str(), l.step)) {
            return Err(unmatched());
        }
        let log = by_id.get(l.session.as_str()).ok_or_else(unmatched)?;
        let s = log.steps.iter().find(|s| s.step == l.step && s.monitored).ok_or_else(unmatched)?;
        let detected = s.detected_complete || s.fallback.as_ref().is_some_and(|f| f.detected_complete);
        out.push(StepOutcome { session: l.session.clone(), step: l.step, expected: l.expected, detected, hallucinations: 0 });
    }
    Ok(out)
}

pub fn confusion(labels: &[PreLabel], logs: &[(String, SessionLog)]) -> Result<ConfusionMatrix, StatsError> {
    let outcomes = pair_outcomes(labels, logs)?;
    Ok(matrix_of(&outcomes))
}

pub fn matrix_of(outcomes: &[StepOutcome]) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for o in outcomes {
        m.add(o.expected, o.detected);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::StepLog;

    fn step(i: u32, detected: bool) -> StepLog {
        StepLog {
            step: i,
            monitored: true,
            announced_at: 0.0,
            detected_complete: detected,
            detection_at: None,
            timed_out: !detected,
            fallback: None,
            advanced_at: 0.0,
            trace: vec![],
        }
    }

    #[test]
    fn one_of_each() {
        let log = SessionLog {
            program: "p".into(),
            poll_hz: 10,
            seed: None,
            steps: vec![step(1, true), step(2, false), step(3, false), step(4, true)],
            ended_at: 0.0,
        };
        let e = [Expected::ShouldComplete, Expected::ShouldComplete, Expected::ShouldNotComplete, Expected::ShouldNotComplete];
        let labels: Vec<PreLabel> =
            e.iter().enumerate().map(|(i, &expected)| PreLabel { session: "s".into(), step: i as u32 + 1, expected }).collect();
        let m = confusion(&labels, &[("s".into(), log.clone())]).unwrap();
        assert_eq!(m, ConfusionMatrix { tp: 1, fn_: 1, tn: 1, fp: 1 });
        let bad = [PreLabel { session: "s".into(), step: 9, expected: Expected::ShouldComplete }];
        assert_eq!(confusion(&bad, &[("s".into(), log)]), Err(StatsError::Pairing { session: "s".into(), step: 9 }));
    }
}
