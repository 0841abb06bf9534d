//! Synthetic pose streams for a standardized patient following a behavior
//! script, with ground truth kept apart from the noisy observations.

mod noise;
mod profile;
mod scenario;
mod script;
mod sim;

use thiserror::Error;

pub use noise::NoiseModel;
pub use profile::{PatientProfile, MRC3_SPEED_SCALE};
pub use scenario::{frames_to_csv, Scenario};
pub use script::{make_prelabel_mix, Behavior, BehaviorScript, Expected, PrelabelMix, OFFSET_RANGE_S};
pub use sim::{Recorder, SimulatedPatient, DWELL_S, NEAR_ANGLE_DEG, NEAR_RADIUS_FACTOR};

/// Default frame rate of the simulator.
pub const DEFAULT_FRAME_HZ: u32 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("behavior script has no entry for monitored step {step}")]
    ScriptMissing { step: u32 },
    #[error("step {step} cannot be performed: {reason}")]
    Infeasible { step: u32, reason: String },
    #[error("step {step}: {reason}")]
    BadScript { step: u32, reason: String },
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error("invalid noise model: {0}")]
    BadNoise(String),
    #[error("frame rate {0} Hz is outside 1..=60")]
    BadRate(u32),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;
    use crate::fixtures::worksheets;
    use crate::genpipe::faithful_program;
    use crate::runtime::{run_session, SessionConfig, VirtualClock};

    fn script_for(p: &crate::dsl::Program, seed: u64, fraction: f64) -> BehaviorScript {
        let monitored: Vec<u32> = p.steps.iter().filter(|s| s.is_monitored()).map(|s| s.index).collect();
        let mix = make_prelabel_mix(monitored.len(), fraction, seed);
        BehaviorScript { steps: monitored.into_iter().zip(mix.behaviors).collect() }
    }

    #[test]
    fn zero_noise_detection_matches_truth_on_every_worksheet() {
        for (w, seed) in worksheets().iter().zip(1..) {
            let p = faithful_program(w);
            let script = script_for(&p, seed, 0.4);
            let mut sim =
                SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &NoiseModel::none(seed), 30).unwrap();
            let log = run_session(&p, &mut sim, &mut VirtualClock::new(), &SessionConfig::default(), &mut |_| {}).unwrap();
            for s in log.steps.iter().filter(|s| s.monitored) {
                let truth = sim.truth().iter().find(|t| t.step == s.step).unwrap();
                match truth.completed_at {
                    Some(t) => {
                        let d = s.detection_at.unwrap_or_else(|| panic!("{} step {} missed", w.id, s.step));
                        assert!(d >= t && d <= t + 0.1 + 1e-9, "{} step {}: {d} vs {t}", w.id, s.step);
                    }
                    None => assert!(!s.detected_complete, "{} step {} false positive", w.id, s.step),
                }
            }
        }
    }

    const ELBOW: &str = "program \"e\"\nscene joint right_elbow_flexion\nscene target bowl at (0, 40, 0)\n\
        step 1: say \"Bend.\" expect within 20s: joint_angle(right_elbow_flexion, 135, 145)\n\
        step 2: say \"Touch.\" expect within 20s: hand_at(bowl, 5)\n";

    #[test]
    fn elbow_plateaus_at_brace_limit() {
        let p = parse_program(ELBOW).unwrap();
        let mut script = BehaviorScript::default();
        script.steps.insert(1, Behavior::CompleteAt { offset_s: 4.0 });
        script.steps.insert(2, Behavior::NoAttempt);
        let err = SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &NoiseModel::none(1), 30).unwrap_err();
        assert!(matches!(err, SimError::Infeasible { step: 1, .. }), "{err}");

        script.steps.insert(1, Behavior::PartialAttempt { fraction: 0.5 });
        let mut sim = Recorder::new(
            SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &NoiseModel::none(1), 30).unwrap(),
        );
        run_session(&p, &mut sim, &mut VirtualClock::new(), &SessionConfig::default(), &mut |_| {}).unwrap();
        let elbow = crate::vocab::joint_index("right_elbow_flexion").unwrap();
        let max = sim.frames.iter().map(|f| f.joints[elbow]).fold(f64::MIN, f64::max);
        assert_eq!(max, 120.0);
    }

    #[test]
    fn complete_at_four_seconds_at_ten_hz() {
        let p = parse_program(ELBOW).unwrap();
        let mut script = BehaviorScript::default();
        script.steps.insert(1, Behavior::NoAttempt);
        script.steps.insert(2, Behavior::CompleteAt { offset_s: 4.0 });
        let profile = PatientProfile::standardized();
        let mut sim = Recorder::new(SimulatedPatient::new(&p, &profile, &script, &NoiseModel::none(1), 10).unwrap());
        let log = run_session(&p, &mut sim, &mut VirtualClock::new(), &SessionConfig::default(), &mut |_| {}).unwrap();
        let s2 = &log.steps[1];
        assert_eq!(log.steps[0].advanced_at, 20.0);
        let first = sim
            .frames
            .iter()
            .find(|f| f.timestamp() > s2.announced_at && crate::runtime::eval::distance(f.hands[1], [0.0, 40.0, 0.0]) <= 5.0)
            .unwrap();
        let rel = first.timestamp() - s2.announced_at;
        assert!((4.0..=4.1).contains(&rel), "{rel}");
        let d = s2.detection_at.unwrap() - s2.announced_at;
        assert!((4.0..=4.1 + 1e-9).contains(&d), "{d}");
    }

    #[test]
    fn missing_script_entry() {
        let p = parse_program(ELBOW).unwrap();
        let mut script = BehaviorScript::default();
        script.steps.insert(2, Behavior::NoAttempt);
        let err = SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &NoiseModel::none(1), 30).unwrap_err();
        assert_eq!(err, SimError::ScriptMissing { step: 1 });
    }

    #[test]
    fn same_seed_same_stream() {
        let p = faithful_program(&worksheets()[5]);
        let script = script_for(&p, 3, 0.363);
        let noise = NoiseModel { fp_rate: 0.05, fn_rate: 0.3, dropout_rate: 0.02, seed: 11, poll_hz: 10 };
        let take = || {
            let sim = SimulatedPatient::new(&p, &PatientProfile::standardized(), &script, &noise, 30).unwrap();
            let mut rec = Recorder::new(sim);
            let log = run_session(&p, &mut rec, &mut VirtualClock::new(), &SessionConfig::default(), &mut |_| {});
            (rec.frames, log.unwrap())
        };
        let (a, b) = (take(), take());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_json(), b.1.to_json());
    }

    #[test]
    fn scenario_round_trip_and_csv() {
        let p = parse_program(ELBOW).unwrap();
        let mut script = BehaviorScript::default();
        script.steps.insert(1, Behavior::NoAttempt);
        script.steps.insert(2, Behavior::CompleteAt { offset_s: 3.0 });
        let sc = Scenario {
            program_id: "e".into(),
            profile: PatientProfile::standardized(),
            script,
            noise: NoiseModel::none(5),
            frame_hz: 30,
        };
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        assert_eq!(back, sc);
        let mut sim = Recorder::new(back.patient(&p).unwrap());
        run_session(&p, &mut sim, &mut VirtualClock::new(), &SessionConfig::default(), &mut |_| {}).unwrap();
        let csv = frames_to_csv(&sim.frames);
        let mut lines = csv.lines();
        let head: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(head[0], "timestamp");
        assert!(lines.all(|l| l.split(',').count() == head.len()));
    }
}
