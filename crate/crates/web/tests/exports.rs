use clinprog_web::{check, example, simulate, stats};
use serde_json::Value;

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn every_worksheet_example_is_faithful_and_paces_adequately() {
    for goal in 1..=10 {
        let ex = json(example(goal).unwrap());
        let prog = ex["program"].as_str().unwrap();
        let c = json(check(&ex["prescription"].to_string(), prog).unwrap());
        assert_eq!(c["fidelity"]["correct"], true, "goal {goal}");
        assert_eq!(c["hallucinations"].as_array().unwrap().len(), 0, "goal {goal}");
        let s = json(simulate(prog, &ex["scenario"].to_string()).unwrap());
        let seqs: Vec<u64> = s["events"].as_array().unwrap().iter().map(|e| e["seq"].as_u64().unwrap()).collect();
        assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
        for p in s["pacing"].as_array().unwrap() {
            assert_eq!(p["verdict"], "adequate", "goal {goal}");
        }
    }
}

#[test]
fn malformed_inputs_are_errors_not_panics() {
    assert!(check("{", "program \"x\"").is_err());
    let ex = json(example(2).unwrap());
    assert!(simulate(ex["program"].as_str().unwrap(), "{}").is_err());
    assert!(simulate("not a program", &ex["scenario"].to_string()).is_err());
    assert!(stats(5, 10, 1.5, [1, 2, 3, 4]).is_err());
}
