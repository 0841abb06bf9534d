use clinprog_core::dsl::parse_program;
use clinprog_core::patientsim::*;
use clinprog_core::runtime::eval::distance;
use clinprog_core::runtime::*;
use proptest::prelude::*;

mod support;
use support::{arb_rom_case, rom_and_monotone, run};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn joints_stay_inside_rom(case in arb_rom_case()) {
        rom_and_monotone(case)?;
    }
}

const REACH: &str = "program \"reach\"\nscene target bowl at (0, 40, 0)\n\
    step 1: say \"Reach.\" expect within 20s: hand_at(bowl, 5)\n";

/// Per-poll observed satisfaction of the reach atom, paired with the clean
/// value, over one 20 s window.
fn reach_polls(behavior: Behavior, fp: f64, fn_: f64, seed: u64) -> Vec<(bool, bool)> {
    let p = parse_program(REACH).unwrap();
    let script = BehaviorScript { steps: [(1, behavior)].into_iter().collect() };
    let mk = |noise: NoiseModel| SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &noise, 30).unwrap();
    let mut clean = mk(NoiseModel::none(seed));
    let mut noisy = mk(NoiseModel { fp_rate: fp, fn_rate: fn_, dropout_rate: 0.0, seed, poll_hz: 10 });
    let cue = Cue { step: 1, at: 0, phase: Phase::Primary };
    let _ = (clean.next_frame(), noisy.next_frame());
    clean.on_announce(&cue);
    noisy.on_announce(&cue);
    let mut out = Vec::new();
    while let (Some(c), Some(n)) = (clean.next_frame(), noisy.next_frame()) {
        if c.t > 20 * MICROS_PER_S {
            break;
        }
        if c.t % 100_000 == 0 {
            let sat = |f: &PoseFrame| distance(f.hands[1], [0.0, 40.0, 0.0]) <= 5.0;
            out.push((sat(&c), sat(&n)));
        }
    }
    out
}

#[test]
fn per_poll_error_rates_match_configuration() {
    let (fp, fn_) = (0.08, 0.25);
    let (mut neg, mut fps, mut pos, mut fns) = (0u64, 0u64, 0u64, 0u64);
    for seed in 0..300 {
        for (clean, noisy) in reach_polls(Behavior::CompleteAt { offset_s: 8.0 }, fp, fn_, seed) {
            if clean {
                pos += 1;
                fns += u64::from(!noisy);
            } else {
                neg += 1;
                fps += u64::from(noisy);
            }
        }
    }
    for (k, n, rate) in [(fps, neg, fp), (fns, pos, fn_)] {
        let se = (rate * (1.0 - rate) / n as f64).sqrt();
        let hat = k as f64 / n as f64;
        assert!(n >= 3000, "only {n} polls");
        assert!((hat - rate).abs() <= 3.0 * se, "{hat} vs {rate} (se {se}, n {n})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With common random numbers a higher false-positive rate can only add
    /// spurious detections.
    #[test]
    fn spurious_detection_monotone_in_fp(seed in any::<u64>()) {
        let p = parse_program(REACH).unwrap();
        let script = BehaviorScript { steps: [(1, Behavior::NoAttempt)].into_iter().collect() };
        let mut prev: Option<f64> = None;
        for fp in [0.0, 0.002, 0.005, 0.01, 0.02, 0.05] {
            let noise = NoiseModel { fp_rate: fp, fn_rate: 0.0, dropout_rate: 0.0, seed, poll_hz: 10 };
            let sim = SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &noise, 30).unwrap();
            let (_, _, log) = run(&p, sim);
            let at = log.steps[0].detection_at;
            if let Some(before) = prev {
                let now = at.unwrap_or(f64::INFINITY);
                prop_assert!(now <= before, "fp {fp}: {now} after {before}");
            }
            prev = Some(at.unwrap_or(f64::INFINITY));
        }
    }
}
