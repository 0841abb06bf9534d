use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::prescription::{Prescription, PrescriptionStep, Unit};
use super::prompt::PromptBundle;
use super::GenError;
use crate::dsl::{self, Atom, Expectation, Predicate, Program, SceneDecl, SceneKind, Step};
use crate::vocab;

/// Something that turns a prompt into candidate program text.
pub trait GeneratorBackend {
    fn id(&self) -> String;
    fn generate(&self, rx: &Prescription, bundle: &PromptBundle) -> Result<String, GenError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: String,
    pub timestamp: String,
    pub prompt_digest: String,
    #[serde(default)]
    pub attempts: u32,
}

/// Obtain raw candidate text. The text is not parsed or validated here.
pub fn generate_program(
    rx: &Prescription,
    bundle: &PromptBundle,
    backend: &dyn GeneratorBackend,
) -> Result<(String, Provenance), GenError> {
    let text = backend.generate(rx, bundle)?;
    let prov = Provenance {
        backend: backend.id(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        prompt_digest: bundle.digest.clone(),
        attempts: 1,
    };
    Ok((extract_program(&text), prov))
}

/// Pull the program out of a chat reply: the first fenced block if any,
/// otherwise the whole reply.
pub fn extract_program(reply: &str) -> String {
    if let Some(open) = reply.find("```") {
        let after = &reply[open + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        if let Some(close) = body.find("```") {
            return body[..close].to_string();
        }
    }
    reply.to_string()
}

/// Builds the faithful program for a prescription by fixed rules over the
/// entity annotations. Never calls out.
#[derive(Debug, Clone, Default)]
pub struct DeterministicBackend;

impl GeneratorBackend for DeterministicBackend {
    fn id(&self) -> String {
        "deterministic".into()
    }

    fn generate(&self, rx: &Prescription, _bundle: &PromptBundle) -> Result<String, GenError> {
        Ok(dsl::print_program(&faithful_program(rx)))
    }
}

/// Rule-based program for a prescription: one step per line, utterances
/// verbatim, monitors derived from each step's annotations.
pub fn faithful_program(rx: &Prescription) -> Program {
    let steps: Vec<Step> = rx
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| Step {
            index: i as u32 + 1,
            say: s.text.clone(),
            expect: monitor_for(s),
            fallback: None,
        })
        .collect();

    let mut targets: Vec<String> = Vec::new();
    let mut objects: Vec<String> = Vec::new();
    let mut joints: Vec<String> = Vec::new();
    for s in &steps {
        if let Some(e) = &s.expect {
            for a in e.pred.atoms() {
                for (id, kind) in a.references() {
                    let list = match kind {
                        SceneKind::Target => &mut targets,
                        SceneKind::Object => &mut objects,
                        SceneKind::Joint => &mut joints,
                    };
                    if !list.iter().any(|x| x == id) {
                        list.push(id.to_string());
                    }
                }
            }
        }
    }
    let mut scene = Vec::new();
    for (i, id) in targets.iter().chain(objects.iter()).enumerate() {
        let kind = if i < targets.len() { SceneKind::Target } else { SceneKind::Object };
        scene.push(SceneDecl { kind, id: id.clone(), position: Some(layout_position(i)) });
    }
    scene.extend(joints.into_iter().map(|id| SceneDecl { kind: SceneKind::Joint, id, position: None }));

    Program { name: rx.id.clone(), scene, steps }
}

/// Table layout for the i-th positioned scene entry: rows of three, 25 cm
/// apart, starting 40 cm in front of the patient.
pub fn layout_position(i: usize) -> [f64; 3] {
    [-25.0 + 25.0 * (i % 3) as f64, 40.0 + 15.0 * (i / 3) as f64, 0.0]
}

const PLACE_WORDS: [&str; 6] = ["place", "put", "stack", "release", "drop", "set"];

fn monitor_for(step: &PrescriptionStep) -> Option<Expectation> {
    let e = &step.entities;
    let lower = step.text.to_lowercase();
    let seconds = e.thresholds.iter().find(|t| t.unit == Unit::S).map(|t| t.value);
    let degrees: Vec<f64> = e.thresholds.iter().filter(|t| t.unit == Unit::Deg).map(|t| t.value).collect();
    let radius = e
        .thresholds
        .iter()
        .find(|t| t.unit == Unit::Cm)
        .map(|t| t.value)
        .unwrap_or(vocab::DEFAULT_RADIUS_CM);

    let first_word = lower.trim_start().split(|c: char| !c.is_alphanumeric()).next().unwrap_or("");
    let atom = if matches!(first_word, "rest" | "relax") && !e.joints.is_empty() {
        let s = seconds.unwrap_or(vocab::DEFAULT_REST_S);
        return Some(expectation(Predicate::Atom(Atom::Rest { joint: e.joints[0].clone(), seconds: s }), None));
    } else if !e.joints.is_empty() && !degrees.is_empty() {
        let (lo, hi) = match degrees.as_slice() {
            [v] => (v * 0.95, v * 1.05),
            d => (
                d.iter().copied().fold(f64::INFINITY, f64::min),
                d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        };
        Atom::JointAngle { joint: e.joints[0].clone(), min_deg: lo, max_deg: hi }
    } else if !e.objects.is_empty() && !e.targets.is_empty() {
        Atom::ObjectAt { object: e.objects[0].clone(), target: e.targets[0].clone(), radius_cm: radius }
    } else if !e.objects.is_empty() {
        let object = e.objects[0].clone();
        if lower.split(|c: char| !c.is_alphanumeric()).any(|w| PLACE_WORDS.contains(&w)) {
            Atom::Release { object }
        } else {
            Atom::Grasp { object }
        }
    } else if !e.targets.is_empty() {
        Atom::HandAt { target: e.targets[0].clone(), radius_cm: radius }
    } else if !e.joints.is_empty() {
        let (lo, hi) = vocab::default_band(&e.joints[0]);
        Atom::JointAngle { joint: e.joints[0].clone(), min_deg: lo, max_deg: hi }
    } else {
        return None;
    };

    let instantaneous = !matches!(atom, Atom::Grasp { .. } | Atom::Release { .. });
    match seconds {
        Some(s) if instantaneous && s > 0.0 => Some(expectation(Predicate::Hold { atom, seconds: s }, Some(s))),
        _ => Some(expectation(Predicate::Atom(atom), None)),
    }
}

fn expectation(pred: Predicate, hold: Option<f64>) -> Expectation {
    let within_s = match hold {
        Some(h) if h >= vocab::DEFAULT_TIMEOUT_S => h + vocab::DEFAULT_TIMEOUT_S,
        _ => vocab::DEFAULT_TIMEOUT_S,
    };
    Expectation { within_s, pred }
}

/// Serves canned replies from `dir/<prompt digest>.txt`.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    pub dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend { dir: dir.into() }
    }

    pub fn transcript_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.txt"))
    }
}

impl GeneratorBackend for ReplayBackend {
    fn id(&self) -> String {
        format!("replay:{}", self.dir.display())
    }

    fn generate(&self, _rx: &Prescription, bundle: &PromptBundle) -> Result<String, GenError> {
        let path = self.transcript_path(&bundle.digest);
        std::fs::read_to_string(&path).map_err(|_| GenError::TranscriptMissing {
            digest: bundle.digest.clone(),
            path: path.display().to_string(),
        })
    }
}
