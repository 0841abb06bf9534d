use clinprog_core::fixtures::{corpus, corpus_manifest, template, templates, worksheets};
use clinprog_core::genpipe::GoalId;
use clinprog_core::retrofit::*;

#[test]
fn templates_are_valid_and_reproduce_worksheets() {
    let ts = templates();
    assert_eq!(ts.len(), 10);
    for (t, w) in ts.iter().zip(worksheets()) {
        t.validate().unwrap();
        let rx = t.instantiate(&w.id, &t.defaults).unwrap();
        assert_eq!(rx.steps, w.steps, "goal {}", t.goal_id);
        let v = retrofit_check(&w, t);
        assert!(v.translatable && v.categories.is_empty(), "goal {}: {v:?}", t.goal_id);
    }
}

#[test]
fn corpus_matches_manifest() {
    let rxs = corpus();
    let manifest = corpus_manifest();
    assert_eq!(rxs.len(), 40);
    assert_eq!(manifest.len(), 40);
    let mut verdicts = Vec::new();
    for (rx, m) in rxs.iter().zip(&manifest) {
        assert_eq!(rx.id, m.id);
        assert_eq!(rx.goal_id, GoalId::Goal(m.goal_id));
        rx.validate().unwrap();
        let v = retrofit_check(rx, &template(m.goal_id).unwrap());
        assert_eq!(v.translatable, m.translatable, "{}: {:#?}", rx.id, v.evidence);
        assert_eq!(v.categories, m.categories, "{}: {:#?}", rx.id, v.evidence);
        assert_eq!(v.translatable, v.categories.is_empty());
        verdicts.push(v);
    }
    assert_eq!(verdicts.iter().filter(|v| v.translatable).count(), 22);
    assert_eq!(category_counts(&verdicts), [15, 6, 6, 4, 3]);
    for g in 1..=10 {
        assert_eq!(manifest.iter().filter(|m| m.goal_id == g).count(), 4);
    }
    for t in 1..=20 {
        assert_eq!(manifest.iter().filter(|m| m.therapist == t).count(), 2);
    }
}

#[test]
fn worked_examples() {
    let g1 = template(1).unwrap();
    let p = TemplateParams { side: Laterality::Left, repetitions: 4, ..g1.defaults.clone() };
    let v = retrofit_check(&g1.instantiate("x", &p).unwrap(), &g1);
    assert!(v.translatable);
    assert_eq!(v.side, Laterality::Left);

    let rx = corpus().into_iter().find(|r| r.id == "g5-t8").unwrap();
    let v = retrofit_check(&rx, &template(5).unwrap());
    assert!(v.categories.contains(&Category::NewEquipmentUse));

    let rx = corpus().into_iter().find(|r| r.id == "g1-t5").unwrap();
    let v = retrofit_check(&rx, &g1);
    assert!(v.categories.contains(&Category::ProceduralVariation));
    let cited: Vec<usize> = v.evidence.iter().filter_map(|e| e.prescription_step).collect();
    assert_eq!(cited, [8, 9, 10]);
}

#[test]
fn comparison_against_template_paradigm() {
    let rxs = corpus();
    let items: Vec<(bool, bool)> = rxs
        .iter()
        .map(|rx| {
            let t = template(rx.goal_id.number().unwrap()).unwrap();
            (true, retrofit_check(rx, &t).translatable)
        })
        .collect();
    let c = paradigm_comparison(&items).unwrap();
    assert_eq!(c.table, [[40, 0], [22, 18]]);
    assert!(c.p_value < 0.01);
}
