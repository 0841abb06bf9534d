use clinprog_core::fixtures::{corpus, template, templates};
use clinprog_core::genpipe::PrescriptionStep;
use clinprog_core::retrofit::*;
use proptest::prelude::*;

fn legal_params() -> impl Strategy<Value = (usize, TemplateParams)> {
    (0usize..10, prop::sample::select(Laterality::ALL.to_vec()), 1u32..5, prop::option::of(1u32..20), any::<prop::sample::Index>())
        .prop_map(|(g, side, reps, hold, pick)| {
            let t = &templates()[g];
            let repetitions = if t.repeat_block.is_some() { reps } else { 1 };
            let difficulty = if t.difficulty_options.is_empty() {
                String::new()
            } else {
                pick.get(&t.difficulty_options).clone()
            };
            let hold_time_s = hold.map_or(0.0, |h| h as f64 / 2.0);
            (g, TemplateParams { side, repetitions, hold_time_s, difficulty })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parameter_edits_stay_translatable((g, p) in legal_params()) {
        let t = &templates()[g];
        let rx = t.instantiate("edit", &p).unwrap();
        let v = retrofit_check(&rx, t);
        prop_assert!(v.translatable, "{:?} {:#?}", p, v.evidence);
        prop_assert!(v.categories.is_empty());
    }

    /// Arbitrary step insertions and deletions never break the verdict
    /// invariant, and repeated checks agree.
    #[test]
    fn verdicts_are_consistent_and_deterministic(
        pick in 0usize..40,
        drops in prop::collection::vec(any::<prop::sample::Index>(), 0..3),
        inserts in prop::collection::vec((any::<prop::sample::Index>(), "[A-Za-z ]{1,30}", any::<bool>(), any::<bool>()), 0..3),
    ) {
        let mut rx = corpus()[pick].clone();
        let t = template(rx.goal_id.number().unwrap()).unwrap();
        for d in drops {
            if rx.steps.len() > 1 {
                let i = d.index(rx.steps.len());
                rx.steps.remove(i);
            }
        }
        for (at, text, conditional, preparatory) in inserts {
            let mut s = PrescriptionStep::plain(text);
            s.entities.conditional = conditional;
            s.entities.preparatory = preparatory;
            let i = at.index(rx.steps.len() + 1);
            rx.steps.insert(i, s);
        }
        let v = retrofit_check(&rx, &t);
        prop_assert_eq!(v.translatable, v.categories.is_empty());
        prop_assert_eq!(&v, &retrofit_check(&rx, &t));
    }
}

#[test]
fn illegal_parameters_are_rejected() {
    let g4 = template(4).unwrap();
    let g1 = template(1).unwrap();
    let bad = |t: &TemplateSchema, f: fn(&mut TemplateParams)| {
        let mut p = t.defaults.clone();
        f(&mut p);
        t.instantiate("x", &p).is_err()
    };
    assert!(bad(&g1, |p| p.repetitions = 0));
    assert!(bad(&g1, |p| p.difficulty = "about 3 feet".into()));
    assert!(bad(&g1, |p| p.hold_time_s = -1.0));
    assert!(!bad(&g4, |p| p.repetitions = 2));
}
