use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::vocab;

/// Which worksheet a prescription was written against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GoalId {
    Goal(u8),
    Custom,
}

impl GoalId {
    pub fn number(self) -> Option<u8> {
        match self {
            GoalId::Goal(n) => Some(n),
            GoalId::Custom => None,
        }
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalId::Goal(n) => write!(f, "{n}"),
            GoalId::Custom => f.write_str("custom"),
        }
    }
}

impl Serialize for GoalId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GoalId::Goal(n) => s.serialize_u8(*n),
            GoalId::Custom => s.serialize_str("custom"),
        }
    }
}

impl<'de> Deserialize<'de> for GoalId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) if (1..=10).contains(&n) => Ok(GoalId::Goal(n as u8)),
            Raw::S(s) if s == "custom" => Ok(GoalId::Custom),
            Raw::N(n) => Err(serde::de::Error::custom(format!("goal_id {n} is not in 1..=10"))),
            Raw::S(s) => Err(serde::de::Error::custom(format!("goal_id {s:?} is neither 1..=10 nor \"custom\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Deg,
    Cm,
    In,
    S,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub unit: Unit,
}

impl Threshold {
    pub fn new(value: f64, unit: Unit) -> Self {
        Threshold { value, unit }
    }

    /// Value in the unit the DSL uses for this quantity (inches become cm).
    pub fn canonical(&self) -> (f64, Unit) {
        match self.unit {
            Unit::In => (self.value * 2.54, Unit::Cm),
            u => (self.value, u),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entities {
    #[serde(default)]
    pub joints: Vec<String>,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
    /// The step is an "if ..." clause.
    #[serde(default)]
    pub conditional: bool,
    /// Practice of a component action ahead of the functional task.
    #[serde(default)]
    pub preparatory: bool,
    /// Symbols outside the canonical vocabularies, declared on purpose.
    #[serde(default)]
    pub novel: Vec<String>,
}

impl Entities {
    pub fn is_empty(&self) -> bool {
        self.joints.is_empty() && self.objects.is_empty() && self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescriptionStep {
    pub text: String,
    #[serde(default)]
    pub entities: Entities,
}

impl PrescriptionStep {
    pub fn plain(text: impl Into<String>) -> Self {
        PrescriptionStep { text: text.into(), entities: Entities::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prescription {
    pub id: String,
    pub goal_id: GoalId,
    #[serde(default)]
    pub author: String,
    pub steps: Vec<PrescriptionStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrescriptionError {
    #[error("prescription has no steps")]
    NoSteps,
    #[error("step {0} has empty text")]
    EmptyStep(usize),
    #[error("step {step}: `{symbol}` is not a known {kind} and is not marked novel")]
    UnknownSymbol { step: usize, symbol: String, kind: &'static str },
    #[error("step {step}: threshold {value} is not finite")]
    BadThreshold { step: usize, value: f64 },
}

/// Union of symbols across every step of a prescription.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    pub joints: BTreeSet<String>,
    pub objects: BTreeSet<String>,
    pub targets: BTreeSet<String>,
    pub thresholds: Vec<Threshold>,
}

impl Prescription {
    pub fn validate(&self) -> Result<(), PrescriptionError> {
        if self.steps.is_empty() {
            return Err(PrescriptionError::NoSteps);
        }
        for (i, s) in self.steps.iter().enumerate() {
            let step = i + 1;
            if s.text.trim().is_empty() {
                return Err(PrescriptionError::EmptyStep(step));
            }
            let e = &s.entities;
            let novel = |x: &String| e.novel.contains(x);
            let checks: [(&Vec<String>, fn(&str) -> bool, &'static str); 3] = [
                (&e.joints, vocab::is_joint, "joint"),
                (&e.objects, vocab::is_object, "object"),
                (&e.targets, vocab::is_target, "target"),
            ];
            for (set, known, kind) in checks {
                if let Some(bad) = set.iter().find(|x| !known(x) && !novel(x)) {
                    return Err(PrescriptionError::UnknownSymbol { step, symbol: bad.clone(), kind });
                }
            }
            if let Some(t) = e.thresholds.iter().find(|t| !t.value.is_finite()) {
                return Err(PrescriptionError::BadThreshold { step, value: t.value });
            }
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::default();
        for s in &self.steps {
            v.joints.extend(s.entities.joints.iter().cloned());
            v.objects.extend(s.entities.objects.iter().cloned());
            v.targets.extend(s.entities.targets.iter().cloned());
            v.thresholds.extend(s.entities.thresholds.iter().copied());
        }
        v
    }

    /// Steps rendered as a numbered list, the form they take in a prompt.
    pub fn numbered_text(&self) -> String {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {}\n", i + 1, s.text))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("prescription serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
