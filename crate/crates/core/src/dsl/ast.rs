use serde::{Deserialize, Serialize};

/// A parsed intervention program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Program {
    pub name: String,
    #[serde(default)]
    pub scene: Vec<SceneDecl>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Target,
    Object,
    Joint,
}

impl SceneKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SceneKind::Target => "target",
            SceneKind::Object => "object",
            SceneKind::Joint => "joint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDecl {
    pub kind: SceneKind,
    pub id: String,
    /// Centimetres. Targets and objects only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub index: u32,
    pub say: String,
    /// Absent for announce-only steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<Fallback>,
}

impl Step {
    pub fn is_monitored(&self) -> bool {
        self.expect.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub within_s: f64,
    pub pred: Predicate,
}

/// Contingency run when the primary expectation times out. Has no fallback
/// of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fallback {
    pub say: String,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Hold { atom: Atom, seconds: f64 },
    Count { atom: Atom, n: u32 },
    #[serde(untagged)]
    Atom(Atom),
}

impl Predicate {
    /// Nesting depth; a bare atom has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Predicate::Atom(_) => 1,
            Predicate::Hold { .. } | Predicate::Count { .. } => 2,
            Predicate::All(ps) | Predicate::Any(ps) => {
                1 + ps.iter().map(Predicate::depth).max().unwrap_or(0)
            }
        }
    }

    /// All atoms in the tree, depth-first, left to right.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Predicate::Atom(a) | Predicate::Hold { atom: a, .. } | Predicate::Count { atom: a, .. } => {
                out.push(a)
            }
            Predicate::All(ps) | Predicate::Any(ps) => {
                for p in ps {
                    p.collect_atoms(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    JointAngle { joint: String, min_deg: f64, max_deg: f64 },
    HandAt { target: String, radius_cm: f64 },
    Grasp { object: String },
    Release { object: String },
    ObjectAt { object: String, target: String, radius_cm: f64 },
    Rest { joint: String, seconds: f64 },
}

impl Atom {
    /// Identifiers the atom refers to, paired with the scene kind each must have.
    pub fn references(&self) -> Vec<(&str, SceneKind)> {
        match self {
            Atom::JointAngle { joint, .. } | Atom::Rest { joint, .. } => {
                vec![(joint.as_str(), SceneKind::Joint)]
            }
            Atom::HandAt { target, .. } => vec![(target.as_str(), SceneKind::Target)],
            Atom::Grasp { object } | Atom::Release { object } => {
                vec![(object.as_str(), SceneKind::Object)]
            }
            Atom::ObjectAt { object, target, .. } => vec![
                (object.as_str(), SceneKind::Object),
                (target.as_str(), SceneKind::Target),
            ],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Atom::JointAngle { .. } => "joint_angle",
            Atom::HandAt { .. } => "hand_at",
            Atom::Grasp { .. } => "grasp",
            Atom::Release { .. } => "release",
            Atom::ObjectAt { .. } => "object_at",
            Atom::Rest { .. } => "rest",
        }
    }
}

impl Program {
    pub fn decl(&self, id: &str) -> Option<&SceneDecl> {
        self.scene.iter().find(|d| d.id == id)
    }

    pub fn position_of(&self, id: &str) -> Option<[f64; 3]> {
        self.decl(id).and_then(|d| d.position)
    }

    pub fn monitored_steps(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(|s| s.is_monitored())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(s: &str) -> Result<Program, serde_json::Error> {
        serde_json::from_str(s)
    }
}
