//! Fixed exercise templates with parameter slots, and the check that decides
//! whether a prescription is just a parameter setting of one.

mod check;
mod compare;
mod template;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{classify_step, retrofit_check, Category, Evidence, RetrofitVerdict};
pub use compare::{paradigm_comparison, ParadigmComparison};
pub use template::{hold_clause, side_text, Laterality, RepeatBlock, TemplateParams, TemplateSchema};

use crate::evalstats::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrofitError {
    #[error("template for goal {goal} is malformed: {reason}")]
    BadTemplate { goal: u8, reason: String },
    #[error("bad template parameters: {0}")]
    BadParams(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Built around lines quoted from a therapist prescription.
    Quoted,
    /// A parameter setting of the template.
    Synthetic,
}

/// Manifest record for one corpus prescription. Categories are not
/// exclusive: a prescription counts once under each category it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub id: String,
    pub goal_id: u8,
    pub therapist: u32,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quoted_steps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<TemplateParams>,
    pub translatable: bool,
    pub categories: BTreeSet<Category>,
}

/// Prescriptions carrying each category, in [`Category::ALL`] order.
pub fn category_counts<'a>(verdicts: impl IntoIterator<Item = &'a RetrofitVerdict>) -> [usize; 5] {
    let mut out = [0; 5];
    for v in verdicts {
        for (k, c) in Category::ALL.iter().enumerate() {
            out[k] += usize::from(v.categories.contains(c));
        }
    }
    out
}
