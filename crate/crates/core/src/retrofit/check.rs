use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::template::{side_text, Laterality, TemplateSchema};
use crate::genpipe::fidelity::normalize;
use crate::genpipe::{Prescription, PrescriptionStep};

/// Why a prescription does not fit its template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    ProceduralVariation,
    NewEquipmentUse,
    Contingency,
    CompensatoryStrategyOptions,
    MotorPriming,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::ProceduralVariation,
        Category::NewEquipmentUse,
        Category::Contingency,
        Category::CompensatoryStrategyOptions,
        Category::MotorPriming,
    ];
}

/// One unmatched step and the rules it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// 1-based; absent when a template step was dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescription_step: Option<usize>,
    /// 1-based fixed step; absent for inserted steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_step: Option<usize>,
    pub categories: Vec<Category>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrofitVerdict {
    pub translatable: bool,
    pub categories: BTreeSet<Category>,
    /// Side under which the template matched best.
    pub side: Laterality,
    pub evidence: Vec<Evidence>,
}

static HOLD_CLAUSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(.*?\S)[.,;]?\s+(?:and )?hold (?:it |the position |this position )?for \d+(?:\.\d+)? seconds?$").unwrap()
});
static ALTERNATIVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(or|instead|may|can use)\b").unwrap());
static USE_YOUR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\buse your\b").unwrap());

#[derive(Debug, Clone, PartialEq)]
struct Canon {
    text: String,
    /// Prescription side: a hold clause was stripped. Template side: the
    /// step may carry one.
    hold: bool,
    /// 1-based index into the original sequence.
    origin: usize,
}

fn canonical_text(text: &str, options: &[String]) -> (String, bool) {
    let mut n = normalize(text);
    let mut held = false;
    if let Some(c) = HOLD_CLAUSE.captures(&n) {
        n = c[1].to_string();
        held = true;
    }
    for o in options {
        let o = normalize(o);
        if !o.is_empty() {
            n = n.replace(&o, "<difficulty>");
        }
    }
    (n, held)
}

/// Remove the second copy of any adjacent repeated block until none is left.
fn collapse_tandems(mut v: Vec<Canon>, same: impl Fn(&Canon, &Canon) -> bool) -> Vec<Canon> {
    'outer: loop {
        let n = v.len();
        for len in 1..=n / 2 {
            for i in 0..=n - 2 * len {
                if (0..len).all(|k| same(&v[i + k], &v[i + len + k])) {
                    v.drain(i + len..i + 2 * len);
                    continue 'outer;
                }
            }
        }
        return v;
    }
}

fn lcs_by<A, B>(a: &[A], b: &[B], eq: impl Fn(&A, &B) -> bool) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if eq(&a[i], &b[j]) { t[i + 1][j + 1] + 1 } else { t[i + 1][j].max(t[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < m {
        if eq(&a[i], &b[j]) {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn matches(rx: &Canon, tmpl: &Canon) -> bool {
    rx.text == tmpl.text && (!rx.hold || tmpl.hold)
}

fn template_canon(t: &TemplateSchema, side: Laterality) -> Vec<Canon> {
    let holdable = t.holdable();
    let v = t
        .fixed_steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (text, _) = canonical_text(&side_text(&s.text, side), &t.difficulty_options);
            Canon { text, hold: holdable[i], origin: i + 1 }
        })
        .collect();
    collapse_tandems(v, |a, b| a.text == b.text && a.hold == b.hold)
}

fn prescription_canon(rx: &Prescription, t: &TemplateSchema) -> Vec<Canon> {
    let v = rx
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (text, hold) = canonical_text(&s.text, &t.difficulty_options);
            Canon { text, hold, origin: i + 1 }
        })
        .collect();
    collapse_tandems(v, |a, b| a.text == b.text && a.hold == b.hold)
}

/// Categories fired by one inserted or rewritten prescription step, in rule
/// order. A step that only adds a condition, an alternative route or priming
/// is an augmentation; anything else, or any step bringing new equipment,
/// also changes the procedure.
pub fn classify_step(step: &PrescriptionStep, t: &TemplateSchema) -> (Vec<Category>, String) {
    let e = &step.entities;
    let text = normalize(&step.text);
    let mut cats = Vec::new();
    let mut why = Vec::new();
    if e.conditional {
        cats.push(Category::Contingency);
        why.push("conditional step".to_string());
    }
    if !e.joints.is_empty() && (ALTERNATIVE.is_match(&text) || (e.conditional && USE_YOUR.is_match(&text))) {
        cats.push(Category::CompensatoryStrategyOptions);
        why.push(format!("alternative movement of {}", e.joints.join(", ")));
    }
    if e.preparatory {
        cats.push(Category::MotorPriming);
        why.push("preparatory practice".to_string());
    }
    let new: Vec<&String> = e
        .objects
        .iter()
        .chain(&e.targets)
        .chain(&e.novel)
        .filter(|o| !t.equipment.contains(*o))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !new.is_empty() {
        cats.push(Category::NewEquipmentUse);
        why.push(format!("equipment outside the template: {}", new.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")));
    }
    let augments = cats.iter().any(|c| matches!(c, Category::Contingency | Category::CompensatoryStrategyOptions | Category::MotorPriming));
    if !augments || !new.is_empty() {
        cats.insert(0, Category::ProceduralVariation);
        if !augments {
            why.insert(0, "no template step matches".to_string());
        }
    }
    (cats, why.join("; "))
}

struct Alignment {
    side: Laterality,
    rx: Vec<Canon>,
    tmpl: Vec<Canon>,
    pairs: Vec<(usize, usize)>,
}

fn align(rx: &Prescription, t: &TemplateSchema) -> Alignment {
    let rc = prescription_canon(rx, t);
    let mut best: Option<Alignment> = None;
    for side in Laterality::ALL {
        let tc = template_canon(t, side);
        let pairs = lcs_by(&rc, &tc, matches);
        let exact = pairs.len() == rc.len() && pairs.len() == tc.len();
        let better = best.as_ref().is_none_or(|b| pairs.len() > b.pairs.len());
        if better || exact {
            best = Some(Alignment { side, rx: rc.clone(), tmpl: tc, pairs });
        }
        if exact {
            break;
        }
    }
    best.expect("three sides tried")
}

/// Whether `rx` is the template under some parameter setting, and if not,
/// which incompatibility categories its residue falls into.
pub fn retrofit_check(rx: &Prescription, t: &TemplateSchema) -> RetrofitVerdict {
    let a = align(rx, t);
    let translatable = a.pairs.len() == a.rx.len() && a.pairs.len() == a.tmpl.len();
    let mut evidence = Vec::new();
    if !translatable {
        let mut anchors = a.pairs.clone();
        anchors.push((a.rx.len(), a.tmpl.len()));
        let (mut i0, mut j0) = (0, 0);
        for (i1, j1) in anchors {
            if i0 == i1 {
                for tj in &a.tmpl[j0..j1] {
                    evidence.push(Evidence {
                        prescription_step: None,
                        template_step: Some(tj.origin),
                        categories: vec![Category::ProceduralVariation],
                        reason: "template step left out".into(),
                    });
                }
            }
            let replaced = a.tmpl[j0..j1].first().map(|c| c.origin);
            for r in &a.rx[i0..i1] {
                let (categories, reason) = classify_step(&rx.steps[r.origin - 1], t);
                evidence.push(Evidence { prescription_step: Some(r.origin), template_step: replaced, categories, reason });
            }
            i0 = i1 + 1;
            j0 = j1 + 1;
        }
    }
    let categories = evidence.iter().flat_map(|e| e.categories.iter().copied()).collect();
    RetrofitVerdict { translatable, categories, side: a.side, evidence }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hold_clause_is_split_off() {
        assert_eq!(canonical_text("Touch the post-it. Hold for 3 seconds.", &[]), ("touch the post-it".into(), true));
        assert_eq!(canonical_text("Hold each position for 3 seconds.", &[]).1, false);
    }

    #[test]
    fn tandem_blocks_collapse() {
        let c = |s: &str| Canon { text: s.into(), hold: false, origin: 0 };
        let v = ["a", "b", "c", "b", "c", "b", "c", "d"].map(c).to_vec();
        let out: Vec<String> = collapse_tandems(v, |a, b| a.text == b.text).into_iter().map(|c| c.text).collect();
        assert_eq!(out, ["a", "b", "c", "d"]);
    }
}
