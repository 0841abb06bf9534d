//! Browser bindings: check a program against its prescription, run it
//! against a simulated patient, and evaluate the interval and exact test.
//! Each export takes and returns JSON text.

use clinprog_core::dsl;
use clinprog_core::evalstats::{fisher_exact_2x2, wilson_interval};
use clinprog_core::fixtures;
use clinprog_core::genpipe::{detect_hallucinated_monitors, faithful_program, validate_fidelity, Prescription};
use clinprog_core::patientsim::{Behavior, BehaviorScript, NoiseModel, PatientProfile, Scenario, DEFAULT_FRAME_HZ};
use clinprog_core::runtime::{assess_pacing, run_session, SessionConfig, VirtualClock, DELAY_THRESHOLD_S};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Worksheet prescription, its generated program and a scenario in which
/// every monitored step completes four seconds after its cue.
pub fn example(goal: u8) -> Result<String, String> {
    let rx = fixtures::worksheet(goal).ok_or_else(|| format!("no worksheet for goal {goal}"))?;
    let p = faithful_program(&rx);
    let mut script = BehaviorScript::default();
    for s in p.steps.iter().filter(|s| s.is_monitored()) {
        script.steps.insert(s.index, Behavior::CompleteAt { offset_s: 4.0 });
    }
    let scenario = Scenario {
        program_id: p.name.clone(),
        profile: PatientProfile::standardized(),
        script,
        noise: NoiseModel::none(1),
        frame_hz: DEFAULT_FRAME_HZ,
    };
    Ok(json!({
        "prescription": rx,
        "program": dsl::print_program(&p),
        "scenario": scenario,
    })
    .to_string())
}

pub fn check(prescription: &str, program: &str) -> Result<String, String> {
    let rx: Prescription = serde_json::from_str(prescription).map_err(|e| format!("prescription: {e}"))?;
    Ok(match dsl::parse_program(program) {
        Err(diagnostics) => json!({ "valid": false, "diagnostics": diagnostics }),
        Ok(p) => json!({
            "valid": true,
            "diagnostics": [],
            "fidelity": validate_fidelity(&rx, &p),
            "hallucinations": detect_hallucinated_monitors(&rx, &p),
        }),
    }
    .to_string())
}

pub fn simulate(program: &str, scenario: &str) -> Result<String, String> {
    let p = dsl::parse_program(program)
        .map_err(|d| d.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))?;
    let sc: Scenario = serde_json::from_str(scenario).map_err(|e| format!("scenario: {e}"))?;
    let mut sim = sc.patient(&p).map_err(|e| e.to_string())?;
    let cfg = SessionConfig { poll_hz: sc.noise.poll_hz, seed: Some(sc.noise.seed), ..Default::default() };
    let mut events = Vec::new();
    let log = run_session(&p, &mut sim, &mut VirtualClock::new(), &cfg, &mut |e| events.push(e.clone()))
        .map_err(|e| e.to_string())?;
    let pacing = assess_pacing(&log, sim.truth(), DELAY_THRESHOLD_S);
    Ok(json!({ "events": events, "log": log, "pacing": pacing }).to_string())
}

pub fn stats(k: u64, n: u64, gamma: f64, table: [u64; 4]) -> Result<String, String> {
    let (lo, hi) = wilson_interval(k, n, gamma).map_err(|e| e.to_string())?;
    let [a, b, c, d] = table;
    let p = fisher_exact_2x2(a, b, c, d).map_err(|e| e.to_string())?;
    Ok(json!({ "wilson": [lo, hi], "fisher_p": p }).to_string())
}

#[wasm_bindgen(js_name = example)]
pub fn example_js(goal: u8) -> Result<String, JsError> {
    example(goal).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = checkProgram)]
pub fn check_js(prescription: &str, program: &str) -> Result<String, JsError> {
    check(prescription, program).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(program: &str, scenario: &str) -> Result<String, JsError> {
    simulate(program, scenario).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = stats)]
#[allow(clippy::too_many_arguments)]
pub fn stats_js(k: u32, n: u32, gamma: f64, a: u32, b: u32, c: u32, d: u32) -> Result<String, JsError> {
    stats(k.into(), n.into(), gamma, [a, b, c, d].map(u64::from)).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn example_checks_clean_and_runs() {
        let ex: Value = serde_json::from_str(&example(1).unwrap()).unwrap();
        let rx = ex["prescription"].to_string();
        let prog = ex["program"].as_str().unwrap();
        let c: Value = serde_json::from_str(&check(&rx, prog).unwrap()).unwrap();
        assert_eq!(c["fidelity"]["correct"], true);
        let s: Value = serde_json::from_str(&simulate(prog, &ex["scenario"].to_string()).unwrap()).unwrap();
        let kinds: Vec<&str> = s["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == "announced").count(), 11);
        assert_eq!(kinds.iter().filter(|k| **k == "completed").count(), 8);
        assert_eq!(kinds.last(), Some(&"session_done"));
    }

    #[test]
    fn edited_program_reports_defects() {
        let ex: Value = serde_json::from_str(&example(3).unwrap()).unwrap();
        let rx = ex["prescription"].to_string();
        let prog = ex["program"].as_str().unwrap();
        let cut: String = prog.lines().filter(|l| !l.starts_with("step 2:")).collect::<Vec<_>>().join("\n");
        let c: Value = serde_json::from_str(&check(&rx, &cut).unwrap()).unwrap();
        assert_eq!(c["valid"], false);
        let c: Value = serde_json::from_str(&check(&rx, "program \"x\"\nstep 1: say").unwrap()).unwrap();
        assert!(c["diagnostics"][0]["line"].as_u64().is_some());
        assert!(example(11).is_err());
    }

    #[test]
    fn stats_values() {
        let s: Value = serde_json::from_str(&stats(352, 398, 0.95, [40, 0, 22, 18]).unwrap()).unwrap();
        assert!((s["wilson"][0].as_f64().unwrap() - 0.8493).abs() < 5e-4);
        assert!(s["fisher_p"].as_f64().unwrap() < 0.01);
        assert!(stats(1, 0, 0.95, [1, 1, 1, 1]).is_err());
    }
}
