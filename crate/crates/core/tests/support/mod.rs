//! Generators and property bodies shared by the property suites and the
//! acceptance run.
#![allow(dead_code)]

use clinprog_core::dsl::*;
use clinprog_core::patientsim::*;
use clinprog_core::runtime::*;
use clinprog_core::vocab::JOINTS as ALL_JOINTS;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const TARGETS: [&str; 3] = ["t_a", "t_b", "t_c"];
pub const OBJECTS: [&str; 2] = ["cup", "block"];
pub const JOINTS: [&str; 2] = ["right_elbow_flexion", "left_wrist_flexion"];

pub fn num() -> impl Strategy<Value = f64> {
    (1u32..4000).prop_map(|k| k as f64 / 8.0)
}

pub fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (0usize..2, 0u32..300, 1u32..59).prop_map(|(j, lo, w)| Atom::JointAngle {
            joint: JOINTS[j].into(),
            min_deg: lo as f64,
            max_deg: (lo + w) as f64 + 0.5,
        }),
        (0usize..3, num()).prop_map(|(t, r)| Atom::HandAt { target: TARGETS[t].into(), radius_cm: r }),
        (0usize..2).prop_map(|o| Atom::Grasp { object: OBJECTS[o].into() }),
        (0usize..2).prop_map(|o| Atom::Release { object: OBJECTS[o].into() }),
        (0usize..2, 0usize..3, num()).prop_map(|(o, t, r)| Atom::ObjectAt {
            object: OBJECTS[o].into(),
            target: TARGETS[t].into(),
            radius_cm: r
        }),
        (0usize..2, 1u32..40).prop_map(|(j, s)| Atom::Rest { joint: JOINTS[j].into(), seconds: s as f64 / 4.0 }),
    ]
}

pub fn pred() -> impl Strategy<Value = Predicate> {
    let leaf = prop_oneof![
        4 => atom().prop_map(Predicate::Atom),
        1 => (atom(), 1u32..20).prop_map(|(atom, s)| Predicate::Hold { atom, seconds: s as f64 / 4.0 }),
        1 => (atom(), 1u32..6).prop_map(|(atom, n)| Predicate::Count { atom, n }),
    ];
    leaf.prop_recursive(2, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Predicate::All),
            prop::collection::vec(inner, 1..4).prop_map(Predicate::Any),
        ]
    })
}

pub fn utterance() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,.'\"\\\\\n\t-]{0,30}".prop_map(|s| format!("Do {s}"))
}

pub fn expectation() -> impl Strategy<Value = Expectation> {
    (pred(), 6u32..120).prop_map(|(pred, w)| Expectation { within_s: w as f64, pred })
}

pub fn step() -> impl Strategy<Value = (String, Option<Expectation>, Option<(String, Expectation)>)> {
    (utterance(), prop::option::of(expectation()), prop::option::of((utterance(), expectation())))
}

pub fn program() -> impl Strategy<Value = Program> {
    ("[a-z-]{1,12}", prop::collection::vec(step(), 1..8), prop::collection::vec(-500i32..500, 15)).prop_map(|(name, steps, xs)| {
        let mut scene = Vec::new();
        for (i, t) in TARGETS.iter().enumerate() {
            let pos = [xs[3 * i] as f64 / 4.0, xs[3 * i + 1] as f64, xs[3 * i + 2] as f64 / 2.0];
            scene.push(SceneDecl { kind: SceneKind::Target, id: t.to_string(), position: Some(pos) });
        }
        for (i, o) in OBJECTS.iter().enumerate() {
            let pos = (i == 0).then(|| [xs[9] as f64, xs[10] as f64, xs[11] as f64]);
            scene.push(SceneDecl { kind: SceneKind::Object, id: o.to_string(), position: pos });
        }
        for j in JOINTS {
            scene.push(SceneDecl { kind: SceneKind::Joint, id: j.into(), position: None });
        }
        let steps = steps
            .into_iter()
            .enumerate()
            .map(|(i, (say, expect, fb))| {
                let fallback = if expect.is_some() { fb.map(|(say, expect)| Fallback { say, expect }) } else { None };
                Step { index: i as u32 + 1, say, expect, fallback }
            })
            .collect();
        Program { name, scene, steps }
    })
}

/// Hold durations must fit their timeout; stretch timeouts to comply.
pub fn fit_holds(p: &mut Program) {
    fn longest(p: &Predicate) -> f64 {
        match p {
            Predicate::Hold { seconds, .. } => *seconds,
            Predicate::All(ps) | Predicate::Any(ps) => ps.iter().map(longest).fold(0.0, f64::max),
            _ => 0.0,
        }
    }
    for s in &mut p.steps {
        let mut es: Vec<&mut Expectation> = s.expect.iter_mut().collect();
        es.extend(s.fallback.as_mut().map(|f| &mut f.expect));
        for e in es {
            e.within_s = e.within_s.max(longest(&e.pred) + 1.0);
        }
    }
}

pub const MIXED: &str = "program \"mixed\"\n\
    scene joint right_elbow_flexion\nscene joint right_wrist_flexion\nscene joint left_shoulder_flexion\n\
    scene target bowl at (0, 40, 0)\nscene object cup\n\
    step 1: say \"Bend.\" expect within 12s: joint_angle(right_elbow_flexion, 60, 100)\n\
    step 2: say \"Reach.\" expect within 12s: hand_at(bowl, 5)\n\
    step 3: say \"Pick up.\" expect within 12s: grasp(cup)\n\
    step 4: say \"Relax.\" expect within 12s: rest(right_wrist_flexion, 2s)\n\
    step 5: say \"Lift.\" expect within 12s: hold(joint_angle(left_shoulder_flexion, 40, 70), 1s)\n\
    step 6: say \"Let go.\" expect within 12s: release(cup)\n";

pub fn behavior() -> impl Strategy<Value = Behavior> {
    prop_oneof![
        (20u32..80).prop_map(|d| Behavior::CompleteAt { offset_s: d as f64 / 10.0 }),
        (1u32..10).prop_map(|f| Behavior::PartialAttempt { fraction: f as f64 / 10.0 }),
        Just(Behavior::NoAttempt),
    ]
}

pub fn profile() -> impl Strategy<Value = PatientProfile> {
    (0.0f64..60.0, 100.0f64..180.0, 0.0f64..30.0, 40.0f64..90.0, 0.0f64..40.0, 70.0f64..170.0, 0.2f64..1.0).prop_map(
        |(elo, ehi, wlo, whi, slo, shi, speed)| {
            let mut p = PatientProfile::unimpaired();
            p.rom_limits.insert("right_elbow_flexion".into(), (elo, ehi));
            p.rom_limits.insert("right_wrist_flexion".into(), (wlo, whi));
            p.rom_limits.insert("left_shoulder_flexion".into(), (slo, shi));
            p.movement_speed_scale = speed;
            p
        },
    )
}

pub fn run(p: &Program, sim: SimulatedPatient) -> (Recorder<SimulatedPatient>, Vec<SessionEvent>, SessionLog) {
    let mut rec = Recorder::new(sim);
    let mut events = Vec::new();
    let log =
        run_session(p, &mut rec, &mut VirtualClock::new(), &SessionConfig::default(), &mut |e| events.push(e.clone())).unwrap();
    (rec, events, log)
}

/// Round trip through the printer, the parser and JSON.
pub fn round_trip(mut p: Program) -> Result<(), TestCaseError> {
    fit_holds(&mut p);
    prop_assert!(validate_semantics(&p).is_empty(), "{:?}", validate_semantics(&p));
    let text = print_program(&p);
    let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
    prop_assert_eq!(&back, &p);
    prop_assert_eq!(print_program(&back), text);
    let json = p.to_json();
    prop_assert_eq!(Program::from_json(&json).unwrap(), p);
    Ok(())
}

pub fn arb_rom_case() -> impl Strategy<Value = (PatientProfile, Vec<Behavior>, f64, f64, f64, u64)> {
    (profile(), prop::collection::vec(behavior(), 6), 0.0f64..0.3, 0.0f64..0.5, 0.0f64..0.1, any::<u64>())
}

/// Joints inside the ROM on every frame, gapless ordered events and a
/// monotone log.
pub fn rom_and_monotone(
    (profile, steps, fp, fn_, dropout, seed): (PatientProfile, Vec<Behavior>, f64, f64, f64, u64),
) -> Result<(), TestCaseError> {
    let p = parse_program(MIXED).unwrap();
    let script = BehaviorScript { steps: (1..=6).zip(steps).collect() };
    let noise = NoiseModel { fp_rate: fp, fn_rate: fn_, dropout_rate: dropout, seed, poll_hz: 10 };
    let sim = match SimulatedPatient::new(&p, &profile, &script, &noise, 10) {
        Ok(s) => s,
        Err(SimError::Infeasible { .. }) => return Ok(()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let (rec, events, log) = run(&p, sim);
    let rom = profile.rom_table();
    for f in &rec.frames {
        for (i, &v) in f.joints.iter().enumerate() {
            prop_assert!(v >= rom[i].0 && v <= rom[i].1, "{} = {v} outside {:?} at {}", ALL_JOINTS[i], rom[i], f.t);
        }
    }
    prop_assert_eq!(events.first().map(|e| e.seq), Some(1));
    for w in events.windows(2) {
        prop_assert!(w[1].seq == w[0].seq + 1);
        prop_assert!(w[1].t >= w[0].t);
    }
    let mut last = 0.0;
    for s in &log.steps {
        for t in [Some(s.announced_at), s.detection_at, s.fallback.as_ref().map(|f| f.announced_at),
                  s.fallback.as_ref().and_then(|f| f.detection_at), Some(s.advanced_at)].into_iter().flatten() {
            prop_assert!(t >= last, "step {} time {t} before {last}", s.step);
            last = t;
        }
    }
    prop_assert!(log.ended_at >= last);
    Ok(())
}

/// Wilson interval holds the point estimate, narrows with four times the
/// data and widens with higher confidence.
pub fn wilson_monotone(k: u64, extra: u64, g: f64) -> Result<(), TestCaseError> {
    use clinprog_core::evalstats::wilson_interval;
    let n = k + extra + 1;
    let (lo, hi) = wilson_interval(k, n, g).unwrap();
    let p = k as f64 / n as f64;
    prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    let (lo4, hi4) = wilson_interval(4 * k, 4 * n, g).unwrap();
    prop_assert!(hi4 - lo4 <= hi - lo + 1e-12);
    let (lo2, hi2) = wilson_interval(k, n, (g + 1.0) / 2.0).unwrap();
    prop_assert!(hi2 - lo2 >= hi - lo - 1e-12);
    Ok(())
}
