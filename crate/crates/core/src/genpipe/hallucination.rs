use serde::{Deserialize, Serialize};

use super::prescription::{Prescription, Unit, Vocabulary};
use crate::dsl::{self, Atom, Expectation, Predicate, Program, SceneKind};
use crate::vocab;

/// Relative tolerance when matching a monitor number to a prescribed one.
pub const THRESHOLD_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReasonCode {
    UnprescribedJoint,
    UnprescribedObject,
    UnprescribedTarget,
    UnprescribedThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationFinding {
    pub step: u32,
    #[serde(default)]
    pub fallback: bool,
    /// The offending atom in program syntax.
    pub atom: String,
    pub symbol: String,
    pub reason: ReasonCode,
}

pub fn detect_hallucinated_monitors(rx: &Prescription, p: &Program) -> Vec<HallucinationFinding> {
    let v = rx.vocabulary();
    let mut out = Vec::new();
    for step in &p.steps {
        let mut exps: Vec<(&Expectation, bool)> = Vec::new();
        if let Some(e) = &step.expect {
            exps.push((e, false));
        }
        if let Some(f) = &step.fallback {
            exps.push((&f.expect, true));
        }
        for (e, fallback) in exps {
            check_pred(&e.pred, &v, step.index, fallback, &mut out);
        }
    }
    out
}

fn check_pred(p: &Predicate, v: &Vocabulary, step: u32, fallback: bool, out: &mut Vec<HallucinationFinding>) {
    match p {
        Predicate::All(ps) | Predicate::Any(ps) => ps.iter().for_each(|c| check_pred(c, v, step, fallback, out)),
        Predicate::Hold { atom, seconds } => {
            check_atom(atom, v, step, fallback, out);
            if !duration_ok(*seconds, None, v) {
                out.push(finding(step, fallback, &dsl::print_predicate(p), seconds, ReasonCode::UnprescribedThreshold));
            }
        }
        Predicate::Count { atom, .. } => check_atom(atom, v, step, fallback, out),
        Predicate::Atom(a) => check_atom(a, v, step, fallback, out),
    }
}

fn check_atom(a: &Atom, v: &Vocabulary, step: u32, fallback: bool, out: &mut Vec<HallucinationFinding>) {
    let text = dsl::print_atom(a);
    for (id, kind) in a.references() {
        let (known, reason) = match kind {
            SceneKind::Joint => (v.joints.contains(id), ReasonCode::UnprescribedJoint),
            SceneKind::Object => (v.objects.contains(id), ReasonCode::UnprescribedObject),
            SceneKind::Target => (v.targets.contains(id), ReasonCode::UnprescribedTarget),
        };
        if !known {
            out.push(HallucinationFinding { step, fallback, atom: text.clone(), symbol: id.to_string(), reason });
        }
    }
    let bad: Vec<f64> = match a {
        Atom::JointAngle { joint, min_deg, max_deg } => {
            let (dlo, dhi) = vocab::default_band(joint);
            [*min_deg, *max_deg]
                .into_iter()
                .filter(|&x| !(near_prescribed(x, Unit::Deg, v) || x == dlo || x == dhi))
                .collect()
        }
        Atom::HandAt { radius_cm, .. } | Atom::ObjectAt { radius_cm, .. } => {
            let r = *radius_cm;
            if near_prescribed(r, Unit::Cm, v) || r == vocab::DEFAULT_RADIUS_CM {
                vec![]
            } else {
                vec![r]
            }
        }
        Atom::Rest { seconds, .. } => {
            if duration_ok(*seconds, Some(vocab::DEFAULT_REST_S), v) {
                vec![]
            } else {
                vec![*seconds]
            }
        }
        Atom::Grasp { .. } | Atom::Release { .. } => vec![],
    };
    for x in bad {
        out.push(finding(step, fallback, &text, &x, ReasonCode::UnprescribedThreshold));
    }
}

fn duration_ok(s: f64, default: Option<f64>, v: &Vocabulary) -> bool {
    near_prescribed(s, Unit::S, v) || default == Some(s)
}

fn near_prescribed(x: f64, unit: Unit, v: &Vocabulary) -> bool {
    v.thresholds.iter().any(|t| {
        let (value, u) = t.canonical();
        u == unit && (x - value).abs() <= THRESHOLD_TOLERANCE * value.abs() + 1e-9
    })
}

fn finding(step: u32, fallback: bool, atom: &str, value: &f64, reason: ReasonCode) -> HallucinationFinding {
    HallucinationFinding { step, fallback, atom: atom.to_string(), symbol: format!("{value}"), reason }
}
