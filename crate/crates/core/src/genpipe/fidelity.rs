use serde::{Deserialize, Serialize};

use super::prescription::Prescription;
use crate::dsl::Program;

/// Minimum normalized Levenshtein similarity for a changed line to count as
/// the same instruction reworded rather than a different one.
pub const SUBSTITUTION_SIMILARITY: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Omitted,
    Extraneous,
    Substituted,
    Reordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditDetail {
    pub prescribed: String,
    pub delivered: String,
    pub distance: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub verdict: Verdict,
    /// 1-based prescription line, absent for extraneous program steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_step: Option<usize>,
    /// Program step index, absent for omitted lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_step: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<EditDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub verdicts: Vec<StepVerdict>,
    pub correct: bool,
    pub complete: bool,
}

impl FidelityReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.verdicts.iter().filter(|s| s.verdict == v).count()
    }

    /// Verdicts other than Match.
    pub fn defects(&self) -> impl Iterator<Item = &StepVerdict> {
        self.verdicts.iter().filter(|s| s.verdict != Verdict::Match)
    }
}

/// Lowercase, collapse whitespace, strip trailing punctuation.
pub fn normalize(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

/// Index pairs of one longest common subsequence, by equality.
pub fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if a[i] == b[j] { t[i + 1][j + 1] + 1 } else { t[i + 1][j].max(t[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < m {
        if a[i] == b[j] {
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

pub fn validate_fidelity(rx: &Prescription, p: &Program) -> FidelityReport {
    let prescribed: Vec<String> = rx.steps.iter().map(|s| normalize(&s.text)).collect();
    let delivered: Vec<String> = p.steps.iter().map(|s| normalize(&s.say)).collect();
    let pairs = lcs_pairs(&prescribed, &delivered);

    let mut rx_used = vec![false; prescribed.len()];
    let mut p_used = vec![false; delivered.len()];
    let mut verdicts: Vec<(f64, StepVerdict)> = Vec::new();
    for &(i, j) in &pairs {
        rx_used[i] = true;
        p_used[j] = true;
        verdicts.push((j as f64, sv(Verdict::Match, Some(i), Some(p.steps[j].index), None)));
    }

    for i in 0..prescribed.len() {
        if rx_used[i] {
            continue;
        }
        if let Some(j) = (0..delivered.len()).find(|&j| !p_used[j] && delivered[j] == prescribed[i]) {
            rx_used[i] = true;
            p_used[j] = true;
            verdicts.push((j as f64, sv(Verdict::Reordered, Some(i), Some(p.steps[j].index), None)));
        }
    }

    let mut candidates = Vec::new();
    for i in (0..prescribed.len()).filter(|&i| !rx_used[i]) {
        for j in (0..delivered.len()).filter(|&j| !p_used[j]) {
            let s = similarity(&prescribed[i], &delivered[j]);
            if s >= SUBSTITUTION_SIMILARITY {
                candidates.push((s, i.abs_diff(j), i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    for (s, _, i, j) in candidates {
        if rx_used[i] || p_used[j] {
            continue;
        }
        rx_used[i] = true;
        p_used[j] = true;
        let detail = EditDetail {
            prescribed: rx.steps[i].text.clone(),
            delivered: p.steps[j].say.clone(),
            distance: strsim::levenshtein(&prescribed[i], &delivered[j]),
            similarity: s,
        };
        verdicts.push((j as f64, sv(Verdict::Substituted, Some(i), Some(p.steps[j].index), Some(detail))));
    }

    for j in (0..delivered.len()).filter(|&j| !p_used[j]) {
        verdicts.push((j as f64, sv(Verdict::Extraneous, None, Some(p.steps[j].index), None)));
    }
    for i in (0..prescribed.len()).filter(|&i| !rx_used[i]) {
        let before = pairs.iter().filter(|&&(pi, _)| pi < i).map(|&(_, pj)| pj as f64).fold(-1.0, f64::max);
        verdicts.push((before + 0.5, sv(Verdict::Omitted, Some(i), None, None)));
    }

    verdicts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let verdicts: Vec<StepVerdict> = verdicts.into_iter().map(|(_, v)| v).collect();
    let correct = prescribed.len() == delivered.len() && verdicts.iter().all(|v| v.verdict == Verdict::Match);
    let complete = !verdicts.iter().any(|v| matches!(v.verdict, Verdict::Omitted | Verdict::Extraneous));
    FidelityReport { verdicts, correct, complete }
}

fn sv(verdict: Verdict, rx: Option<usize>, program_step: Option<u32>, detail: Option<EditDetail>) -> StepVerdict {
    StepVerdict { verdict, rx_step: rx.map(|i| i + 1), program_step, detail }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize("  Rest   your Hand. "), "rest your hand");
        assert_eq!(normalize("Go!?"), "go");
        assert_eq!(normalize("a-b"), "a-b");
    }

    #[test]
    fn lcs_simple() {
        let a = ["a", "b", "c", "d"];
        let b = ["a", "c", "d", "x"];
        assert_eq!(lcs_pairs(&a, &b), vec![(0, 0), (2, 1), (3, 2)]);
    }
}
