use std::collections::BTreeSet;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::RetrofitError;
use crate::genpipe::{GoalId, Prescription, PrescriptionStep, Threshold, Unit};

/// Exercise side. Worksheets are written for the right side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Laterality {
    Right,
    Left,
    Bilateral,
}

impl Laterality {
    pub const ALL: [Laterality; 3] = [Laterality::Right, Laterality::Left, Laterality::Bilateral];
}

/// Consecutive copies of `len` steps starting at 1-based step `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatBlock {
    pub start: usize,
    pub len: usize,
    pub times: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateParams {
    pub side: Laterality,
    pub repetitions: u32,
    pub hold_time_s: f64,
    /// One of the template's difficulty options, or empty when it has none.
    #[serde(default)]
    pub difficulty: String,
}

/// A worksheet with fixed instructions and a few bounded parameter slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSchema {
    pub goal_id: u8,
    #[serde(default)]
    pub title: String,
    pub fixed_steps: Vec<PrescriptionStep>,
    pub equipment: BTreeSet<String>,
    #[serde(default)]
    pub repeat_block: Option<RepeatBlock>,
    /// 1-based steps that may carry a hold time.
    #[serde(default)]
    pub hold_steps: Vec<usize>,
    #[serde(default)]
    pub difficulty_options: Vec<String>,
    /// Values the fixed steps are written with.
    pub defaults: TemplateParams,
}

static SIDE_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?i:(left|right))\b").unwrap());
static BILATERAL_LIMB: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?i:(your|the)) right (hand|arm)\b").unwrap());

fn keep_case(word: &str, like: &str) -> String {
    if like.starts_with(|c: char| c.is_uppercase()) {
        let mut cs = word.chars();
        cs.next().map(|c| c.to_uppercase().chain(cs).collect()).unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// Rewrite right-side text for another side.
pub fn side_text(text: &str, side: Laterality) -> String {
    match side {
        Laterality::Right => text.to_string(),
        Laterality::Left => SIDE_WORD
            .replace_all(text, |c: &Captures| {
                let w = &c[1];
                keep_case(if w.eq_ignore_ascii_case("left") { "right" } else { "left" }, w)
            })
            .into_owned(),
        Laterality::Bilateral => {
            let t = BILATERAL_LIMB.replace_all(text, |c: &Captures| format!("{} {}s", keep_case("both", &c[1]), &c[2]));
            SIDE_WORD
                .replace_all(&t, |c: &Captures| {
                    if c[1].eq_ignore_ascii_case("right") { keep_case("both", &c[1]) } else { c[1].to_string() }
                })
                .into_owned()
        }
    }
}

fn side_joints(joints: &[String], side: Laterality) -> Vec<String> {
    let swap = |j: &String| {
        if let Some(b) = j.strip_prefix("right_") {
            format!("left_{b}")
        } else if let Some(b) = j.strip_prefix("left_") {
            format!("right_{b}")
        } else {
            j.clone()
        }
    };
    match side {
        Laterality::Right => joints.to_vec(),
        Laterality::Left => joints.iter().map(swap).collect(),
        Laterality::Bilateral => {
            let mut out = joints.to_vec();
            out.extend(joints.iter().filter(|j| j.starts_with("right_")).map(swap));
            out
        }
    }
}

/// Sentence appended to a holdable step.
pub fn hold_clause(seconds: f64) -> String {
    format!("Hold for {seconds} seconds.")
}

impl TemplateSchema {
    pub fn validate(&self) -> Result<(), RetrofitError> {
        let bad = |m: String| Err(RetrofitError::BadTemplate { goal: self.goal_id, reason: m });
        if !(1..=10).contains(&self.goal_id) {
            return bad("goal_id must be in 1..=10".into());
        }
        let n = self.fixed_steps.len();
        if n == 0 {
            return bad("fixed_steps is empty".into());
        }
        if let Some(b) = self.repeat_block {
            let end = b.start - 1 + b.len * b.times as usize;
            if b.start == 0 || b.len == 0 || b.times == 0 || end > n {
                return bad(format!("repeat block {b:?} does not fit {n} steps"));
            }
            let first = &self.fixed_steps[b.start - 1..b.start - 1 + b.len];
            for k in 1..b.times as usize {
                let copy = &self.fixed_steps[b.start - 1 + k * b.len..b.start - 1 + (k + 1) * b.len];
                if copy.iter().map(|s| &s.text).ne(first.iter().map(|s| &s.text)) {
                    return bad(format!("copy {} of the repeat block differs from the first", k + 1));
                }
            }
            if self.defaults.repetitions != b.times {
                return bad("default repetitions differ from the repeat block".into());
            }
        }
        if let Some(&h) = self.hold_steps.iter().find(|&&h| h == 0 || h > n) {
            return bad(format!("hold step {h} is out of range"));
        }
        if self.difficulty_options.is_empty() != self.defaults.difficulty.is_empty() {
            return bad("default difficulty must be one of the options".into());
        }
        if !self.difficulty_options.is_empty() {
            if !self.difficulty_options.contains(&self.defaults.difficulty) {
                return bad(format!("default difficulty {:?} is not an option", self.defaults.difficulty));
            }
            if !self.fixed_steps.iter().any(|s| s.text.contains(&self.defaults.difficulty)) {
                return bad("default difficulty does not occur in the fixed steps".into());
            }
        }
        if self.defaults.side != Laterality::Right || self.defaults.hold_time_s != 0.0 {
            return bad("fixed steps must be written for the right side without holds".into());
        }
        Ok(())
    }

    /// Whether each fixed step may carry a hold time.
    pub fn holdable(&self) -> Vec<bool> {
        (1..=self.fixed_steps.len()).map(|i| self.hold_steps.contains(&i)).collect()
    }

    /// Fixed steps with the repeat block expanded `repetitions` times, each
    /// paired with its 1-based fixed step number.
    pub fn expanded(&self, repetitions: u32) -> Vec<(usize, &PrescriptionStep)> {
        let all: Vec<(usize, &PrescriptionStep)> = self.fixed_steps.iter().enumerate().map(|(i, s)| (i + 1, s)).collect();
        let Some(b) = self.repeat_block else { return all };
        let s = b.start - 1;
        let block = &all[s..s + b.len];
        let mut out = all[..s].to_vec();
        for _ in 0..repetitions {
            out.extend_from_slice(block);
        }
        out.extend_from_slice(&all[s + b.len * b.times as usize..]);
        out
    }

    pub fn check_params(&self, p: &TemplateParams) -> Result<(), RetrofitError> {
        let bad = |m: String| Err(RetrofitError::BadParams(m));
        if p.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        if self.repeat_block.is_none() && p.repetitions != 1 {
            return bad(format!("goal {} has no repeatable block", self.goal_id));
        }
        if !(p.hold_time_s.is_finite() && p.hold_time_s >= 0.0) {
            return bad(format!("hold time {} must be a finite number of seconds >= 0", p.hold_time_s));
        }
        if p.difficulty != self.defaults.difficulty && !self.difficulty_options.contains(&p.difficulty) {
            return bad(format!("difficulty {:?} is not offered by goal {}", p.difficulty, self.goal_id));
        }
        Ok(())
    }

    /// The prescription this template produces under `p`.
    pub fn instantiate(&self, id: &str, p: &TemplateParams) -> Result<Prescription, RetrofitError> {
        self.check_params(p)?;
        let reps = if self.repeat_block.is_some() { p.repetitions } else { 1 };
        let holdable = self.holdable();
        let steps = self
            .expanded(reps)
            .into_iter()
            .map(|(i, s)| {
                let mut text = s.text.clone();
                if !self.defaults.difficulty.is_empty() {
                    text = text.replace(&self.defaults.difficulty, &p.difficulty);
                }
                text = side_text(&text, p.side);
                let mut entities = s.entities.clone();
                entities.joints = side_joints(&entities.joints, p.side);
                if p.hold_time_s > 0.0 && holdable[i - 1] {
                    text = format!("{text} {}", hold_clause(p.hold_time_s));
                    entities.thresholds.push(Threshold::new(p.hold_time_s, Unit::S));
                }
                PrescriptionStep { text, entities }
            })
            .collect();
        Ok(Prescription { id: id.to_string(), goal_id: GoalId::Goal(self.goal_id), author: "template".into(), steps })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
