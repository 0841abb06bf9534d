use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::diag::{Rule, Span};
use super::parser::{PredSpans, SourceMap};
use crate::vocab;

pub const MAX_PRED_DEPTH: usize = 4;

/// Which construct an issue is about. Steps are addressed by position in
/// `Program::steps`, not by their declared index, since the index itself may
/// be the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "at")]
pub enum Locus {
    Program,
    Scene { decl: usize },
    StepIndex { step: usize },
    Utterance { step: usize, fallback: bool },
    Timeout { step: usize, fallback: bool },
    Pred { step: usize, fallback: bool, path: Vec<usize> },
    Reference { step: usize, fallback: bool, path: Vec<usize>, arg: usize },
    Fallback { step: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticIssue {
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    pub message: String,
    pub locus: Locus,
}

/// Check every program invariant. Empty iff the program is valid.
pub fn validate_semantics(p: &Program) -> Vec<SemanticIssue> {
    let mut out = Vec::new();
    let mut decls: HashMap<&str, SceneKind> = HashMap::new();

    for (i, d) in p.scene.iter().enumerate() {
        let locus = Locus::Scene { decl: i };
        if !is_identifier(&d.id) {
            out.push(issue(Rule::BadIdentifier, None, format!("{:?} is not a valid identifier", d.id), locus.clone()));
        }
        if decls.insert(d.id.as_str(), d.kind).is_some() {
            out.push(issue(Rule::DuplicateId, None, format!("`{}` is declared more than once", d.id), locus.clone()));
        }
        match d.kind {
            SceneKind::Joint => {
                if !vocab::is_joint(&d.id) {
                    out.push(issue(Rule::UnknownJoint, None, format!("`{}` is not a canonical joint", d.id), locus.clone()));
                }
                if d.position.is_some() {
                    out.push(issue(Rule::PositionOnJoint, None, format!("joint `{}` cannot have a position", d.id), locus));
                }
            }
            _ => {
                if let Some(pos) = d.position {
                    if pos.iter().any(|v| !v.is_finite()) {
                        out.push(issue(Rule::NonfiniteNumber, None, format!("position of `{}` is not finite", d.id), locus));
                    }
                }
            }
        }
    }

    if p.steps.is_empty() {
        out.push(issue(Rule::NoSteps, None, "program has no steps".into(), Locus::Program));
    }
    for (pos, step) in p.steps.iter().enumerate() {
        if step.index as usize != pos + 1 {
            out.push(issue(
                Rule::NoncontiguousSteps,
                Some(step.index),
                format!("step numbered {} where {} was expected", step.index, pos + 1),
                Locus::StepIndex { step: pos },
            ));
            break;
        }
    }

    for (pos, step) in p.steps.iter().enumerate() {
        let idx = Some(step.index);
        if step.say.trim().is_empty() {
            out.push(issue(Rule::EmptyUtterance, idx, format!("step {} has an empty utterance", step.index), Locus::Utterance { step: pos, fallback: false }));
        }
        if let Some(e) = &step.expect {
            check_expectation(e, pos, false, step.index, &decls, &mut out);
        }
        if let Some(fb) = &step.fallback {
            if step.expect.is_none() {
                out.push(issue(
                    Rule::FallbackWithoutMonitor,
                    idx,
                    format!("step {} has a fallback but no primary expectation", step.index),
                    Locus::Fallback { step: pos },
                ));
            }
            if fb.say.trim().is_empty() {
                out.push(issue(Rule::EmptyUtterance, idx, format!("step {} fallback has an empty utterance", step.index), Locus::Utterance { step: pos, fallback: true }));
            }
            check_expectation(&fb.expect, pos, true, step.index, &decls, &mut out);
        }
    }
    out
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn issue(rule: Rule, step: Option<u32>, message: String, locus: Locus) -> SemanticIssue {
    SemanticIssue { rule, step, message, locus }
}

fn check_expectation(
    e: &Expectation,
    pos: usize,
    fallback: bool,
    index: u32,
    decls: &HashMap<&str, SceneKind>,
    out: &mut Vec<SemanticIssue>,
) {
    let idx = Some(index);
    if !(e.within_s.is_finite() && e.within_s > 0.0) {
        out.push(issue(
            Rule::NonpositiveTimeout,
            idx,
            format!("step {index}: timeout must be positive"),
            Locus::Timeout { step: pos, fallback },
        ));
    }
    if e.pred.depth() > MAX_PRED_DEPTH {
        out.push(issue(
            Rule::DepthExceeded,
            idx,
            format!("step {index}: predicate depth {} exceeds {MAX_PRED_DEPTH}", e.pred.depth()),
            Locus::Pred { step: pos, fallback, path: Vec::new() },
        ));
    }
    let mut path = Vec::new();
    check_pred(&e.pred, e.within_s, pos, fallback, index, &mut path, decls, out);
}

#[allow(clippy::too_many_arguments)]
fn check_pred(
    p: &Predicate,
    timeout: f64,
    pos: usize,
    fallback: bool,
    index: u32,
    path: &mut Vec<usize>,
    decls: &HashMap<&str, SceneKind>,
    out: &mut Vec<SemanticIssue>,
) {
    let idx = Some(index);
    let here = |path: &Vec<usize>| Locus::Pred { step: pos, fallback, path: path.clone() };
    match p {
        Predicate::All(ps) | Predicate::Any(ps) => {
            if ps.is_empty() {
                out.push(issue(Rule::EmptyCombinator, idx, format!("step {index}: `all`/`any` needs at least one operand"), here(path)));
            }
            for (i, c) in ps.iter().enumerate() {
                path.push(i);
                check_pred(c, timeout, pos, fallback, index, path, decls, out);
                path.pop();
            }
        }
        Predicate::Hold { atom, seconds } => {
            if !(seconds.is_finite() && *seconds > 0.0) {
                out.push(issue(Rule::NonpositiveDuration, idx, format!("step {index}: hold duration must be positive"), here(path)));
            } else if *seconds >= timeout {
                out.push(issue(
                    Rule::HoldExceedsTimeout,
                    idx,
                    format!("step {index}: hold of {seconds}s does not fit in the {timeout}s timeout"),
                    here(path),
                ));
            }
            path.push(0);
            check_atom(atom, pos, fallback, index, path, decls, out);
            path.pop();
        }
        Predicate::Count { atom, n } => {
            if *n == 0 {
                out.push(issue(Rule::CountZero, idx, format!("step {index}: count must be at least 1"), here(path)));
            }
            path.push(0);
            check_atom(atom, pos, fallback, index, path, decls, out);
            path.pop();
        }
        Predicate::Atom(a) => check_atom(a, pos, fallback, index, path, decls, out),
    }
}

fn check_atom(
    a: &Atom,
    pos: usize,
    fallback: bool,
    index: u32,
    path: &[usize],
    decls: &HashMap<&str, SceneKind>,
    out: &mut Vec<SemanticIssue>,
) {
    let idx = Some(index);
    let here = Locus::Pred { step: pos, fallback, path: path.to_vec() };
    match a {
        Atom::JointAngle { min_deg, max_deg, .. } => {
            let in_range = |v: f64| v.is_finite() && (0.0..360.0).contains(&v);
            if !(in_range(*min_deg) && in_range(*max_deg) && min_deg < max_deg) {
                out.push(issue(
                    Rule::BadAngleRange,
                    idx,
                    format!("step {index}: angle range [{min_deg}, {max_deg}] must satisfy 0 <= min < max < 360"),
                    here.clone(),
                ));
            }
        }
        Atom::HandAt { radius_cm, .. } | Atom::ObjectAt { radius_cm, .. } => {
            if !(radius_cm.is_finite() && *radius_cm > 0.0) {
                out.push(issue(Rule::NonpositiveRadius, idx, format!("step {index}: radius must be positive"), here.clone()));
            }
        }
        Atom::Rest { seconds, .. } => {
            if !(seconds.is_finite() && *seconds > 0.0) {
                out.push(issue(Rule::NonpositiveDuration, idx, format!("step {index}: rest duration must be positive"), here.clone()));
            }
        }
        Atom::Grasp { .. } | Atom::Release { .. } => {}
    }
    for (arg, (id, kind)) in a.references().into_iter().enumerate() {
        let locus = Locus::Reference { step: pos, fallback, path: path.to_vec(), arg };
        match decls.get(id) {
            None => out.push(issue(
                Rule::UndeclaredId,
                idx,
                format!("step {index}: `{id}` is not declared in the scene"),
                locus,
            )),
            Some(k) if *k != kind => out.push(issue(
                Rule::KindMismatch,
                idx,
                format!("step {index}: `{id}` is declared as a {} but used as a {}", k.keyword(), kind.keyword()),
                locus,
            )),
            Some(_) => {}
        }
    }
}

/// Resolve an issue's locus to a source span.
pub fn locate(map: &SourceMap, locus: &Locus) -> Span {
    let whole = map.steps.iter().fold(map.name, |acc, s| acc.to(s.span));
    match locus {
        Locus::Program => whole,
        Locus::Scene { decl } => map.scene.get(*decl).copied().unwrap_or(whole),
        Locus::StepIndex { step } => map.steps.get(*step).map(|s| s.index).unwrap_or(whole),
        Locus::Utterance { step, fallback } => match map.steps.get(*step) {
            Some(s) if *fallback => s.fallback.as_ref().map(|f| f.1).unwrap_or(s.span),
            Some(s) => s.say,
            None => whole,
        },
        Locus::Timeout { step, fallback } => expect_spans(map, *step, *fallback)
            .map(|e| e.timeout)
            .unwrap_or(whole),
        Locus::Pred { step, fallback, path } => expect_spans(map, *step, *fallback)
            .map(|e| walk(&e.pred, path).span)
            .unwrap_or(whole),
        Locus::Reference { step, fallback, path, arg } => expect_spans(map, *step, *fallback)
            .map(|e| {
                let node = walk(&e.pred, path);
                node.ids.get(*arg).copied().unwrap_or(node.span)
            })
            .unwrap_or(whole),
        Locus::Fallback { step } => map
            .steps
            .get(*step)
            .map(|s| s.fallback.as_ref().map(|f| f.0).unwrap_or(s.span))
            .unwrap_or(whole),
    }
}

fn expect_spans(map: &SourceMap, step: usize, fallback: bool) -> Option<&super::parser::ExpectSpans> {
    let s = map.steps.get(step)?;
    if fallback {
        s.fallback.as_ref().map(|f| &f.2)
    } else {
        s.expect.as_ref()
    }
}

fn walk<'a>(node: &'a PredSpans, path: &[usize]) -> &'a PredSpans {
    let mut cur = node;
    for &i in path {
        match cur.children.get(i) {
            Some(c) => cur = c,
            None => break,
        }
    }
    cur
}
