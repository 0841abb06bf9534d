//! Bundled data: the ten exercise worksheets as annotated prescriptions,
//! their templates, and the 40-prescription retrofit corpus.

use crate::genpipe::Prescription;
use crate::retrofit::{CorpusEntry, TemplateSchema};

const WORKSHEETS: &str = include_str!("../fixtures/worksheets.json");
const TEMPLATES: &str = include_str!("../fixtures/templates.json");
const CORPUS: &str = include_str!("../fixtures/corpus.json");
const MANIFEST: &str = include_str!("../fixtures/corpus_manifest.json");

/// Goals 1 to 10, in order.
pub fn worksheets() -> Vec<Prescription> {
    serde_json::from_str(WORKSHEETS).expect("bundled worksheets parse")
}

pub fn worksheet(goal: u8) -> Option<Prescription> {
    worksheets().into_iter().find(|p| p.goal_id == crate::genpipe::GoalId::Goal(goal))
}

/// Goals 1 to 10, in order.
pub fn templates() -> Vec<TemplateSchema> {
    serde_json::from_str(TEMPLATES).expect("bundled templates parse")
}

pub fn template(goal: u8) -> Option<TemplateSchema> {
    templates().into_iter().find(|t| t.goal_id == goal)
}

/// Therapist prescriptions, ordered by goal then therapist.
pub fn corpus() -> Vec<Prescription> {
    serde_json::from_str(CORPUS).expect("bundled corpus parses")
}

/// Provenance and expected verdict of each corpus prescription.
pub fn corpus_manifest() -> Vec<CorpusEntry> {
    serde_json::from_str(MANIFEST).expect("bundled manifest parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::validate_semantics;
    use crate::genpipe::{faithful_program, validate_fidelity};

    #[test]
    fn worksheets_are_sound() {
        let ws = worksheets();
        assert_eq!(ws.len(), 10);
        assert_eq!(ws.iter().map(|w| w.steps.len()).sum::<usize>(), 106);
        let mut monitored = Vec::new();
        for w in &ws {
            w.validate().unwrap();
            let p = faithful_program(w);
            assert!(validate_semantics(&p).is_empty(), "{}", w.id);
            let f = validate_fidelity(w, &p);
            assert!(f.correct && f.complete, "{}", w.id);
            monitored.push(p.steps.iter().filter(|s| s.is_monitored()).count());
        }
        assert_eq!(monitored, vec![8, 7, 8, 10, 9, 8, 9, 7, 11, 9]);
    }

    #[test]
    fn goal_one_shape() {
        let p = faithful_program(&worksheet(1).unwrap());
        assert_eq!(p.steps.len(), 11);
        assert_eq!(p.scene.iter().filter(|d| d.kind == crate::dsl::SceneKind::Target).count(), 3);
    }
}
