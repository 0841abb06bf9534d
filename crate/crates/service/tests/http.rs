use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use clinprog_core::fixtures::{corpus, worksheet};
use clinprog_core::patientsim::{Behavior, BehaviorScript, NoiseModel, PatientProfile, Scenario};
use clinprog_service::api::{router, AppState};
use clinprog_service::store::Store;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    _dir: tempfile::TempDir,
}

impl Harness {
    fn new() -> Harness {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::new(Store::open(dir.path()).unwrap());
        Harness { app: router(state), _dir: dir }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.raw(method, uri, body.map(|b| b.to_string())).await;
        let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, v)
    }

    async fn raw(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    /// Parsed `data:` payloads of every server-sent event, with their names.
    async fn events(&self, uri: &str) -> Vec<(String, Value)> {
        let (status, bytes) = tokio::time::timeout(Duration::from_secs(60), self.raw("GET", uri, None)).await.unwrap();
        assert_eq!(status, StatusCode::OK);
        let text = String::from_utf8(bytes).unwrap();
        let mut out = Vec::new();
        for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
            let mut name = String::from("message");
            let mut data = String::new();
            for line in block.lines() {
                if let Some(n) = line.strip_prefix("event:") {
                    name = n.trim().to_string();
                } else if let Some(d) = line.strip_prefix("data:") {
                    data.push_str(d.trim());
                }
            }
            if !data.is_empty() {
                out.push((name, serde_json::from_str(&data).unwrap()));
            }
        }
        out
    }

    /// Goal-1 prescription, its deterministic program and a zero-noise
    /// scenario in which every monitored step completes after 3 s.
    async fn goal1(&self) -> (String, String) {
        let (st, rx) = self.call("POST", "/prescriptions", Some(json!(worksheet(1).unwrap()))).await;
        assert_eq!(st, StatusCode::CREATED);
        let rx_id = rx["id"].as_str().unwrap().to_string();
        let (st, prog) =
            self.call("POST", &format!("/prescriptions/{rx_id}/generate"), Some(json!({"backend": "deterministic"}))).await;
        assert_eq!(st, StatusCode::CREATED, "{prog}");
        let program = clinprog_core::dsl::parse_program(prog["payload"]["source"].as_str().unwrap()).unwrap();
        let mut script = BehaviorScript::default();
        for s in program.steps.iter().filter(|s| s.is_monitored()) {
            script.steps.insert(s.index, Behavior::CompleteAt { offset_s: 3.0 });
        }
        let sc = Scenario {
            program_id: program.name.clone(),
            profile: PatientProfile::standardized(),
            script,
            noise: NoiseModel::none(1),
            frame_hz: 30,
        };
        let (st, sc) = self.call("POST", "/scenarios", Some(json!(sc))).await;
        assert_eq!(st, StatusCode::CREATED, "{sc}");
        (prog["id"].as_str().unwrap().to_string(), sc["id"].as_str().unwrap().to_string())
    }

    async fn session(&self, program: &str, scenario: &str, rt: f64) -> String {
        let (st, s) = self
            .call("POST", "/sessions", Some(json!({"program_id": program, "scenario_id": scenario, "rt_factor": rt})))
            .await;
        assert_eq!(st, StatusCode::CREATED, "{s}");
        s["id"].as_str().unwrap().to_string()
    }
}

fn count(events: &[(String, Value)], kind: &str) -> usize {
    events.iter().filter(|(n, _)| n == kind).count()
}

fn assert_gapless(events: &[(String, Value)], first: u64) {
    let seqs: Vec<u64> = events.iter().filter_map(|(_, v)| v["seq"].as_u64()).collect();
    let want: Vec<u64> = (first..first + seqs.len() as u64).collect();
    assert_eq!(seqs, want);
    let last_real = events.iter().rev().find(|(_, v)| v.get("seq").is_some()).unwrap();
    assert_eq!(last_real.0, "session_done");
    assert_eq!(count(events, "session_done"), 1);
}

#[tokio::test]
async fn prescription_round_trip_and_health() {
    let h = Harness::new();
    let rx = corpus().into_iter().next().unwrap();
    let (st, posted) = h.call("POST", "/prescriptions", Some(json!(rx))).await;
    assert_eq!(st, StatusCode::CREATED);
    let id = posted["id"].as_str().unwrap();
    let (st, got) = h.call("GET", &format!("/prescriptions/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(got["payload"], json!(rx));
    assert_eq!(got["digest"], posted["digest"]);
    let (_, list) = h.call("GET", "/prescriptions", None).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    let (st, health) = h.call("GET", "/health", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(health["status"], "ok");
    assert_eq!(health["counts"]["prescription"], 1);
    assert_eq!(health["counts"]["program"], 0);
}

#[tokio::test]
async fn errors_carry_code_message_detail() {
    let h = Harness::new();
    let (st, e) = h.call("GET", "/prescriptions/01NOPE", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(e["code"], "not_found");
    assert!(e["message"].as_str().unwrap().contains("01NOPE"));
    assert_eq!(e["detail"]["kind"], "prescription");

    let (st, bytes) = h.raw("POST", "/prescriptions", Some("{not json".into())).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let e: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(e["code"], "bad_json");

    let mut rx = worksheet(2).unwrap();
    rx.steps[0].text.clear();
    let (st, e) = h.call("POST", "/prescriptions", Some(json!(rx))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["code"], "validation_failed");

    let (st, e) = h.call("POST", "/sessions", Some(json!({"program_id": "x", "scenario_id": "y"}))).await;
    assert_eq!(st, StatusCode::NOT_FOUND, "{e}");
    let (st, _) = h.call("GET", "/sessions/nope/events", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn generate_and_validate() {
    let h = Harness::new();
    let (prog, _) = h.goal1().await;
    let (st, v) = h.call("POST", &format!("/programs/{prog}/validate"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["valid"], true);
    assert_eq!(v["fidelity"]["correct"], true);
    assert_eq!(v["fidelity"]["complete"], true);
    assert_eq!(v["hallucinations"], json!([]));
    let (_, p) = h.call("GET", &format!("/programs/{prog}"), None).await;
    assert_eq!(p["payload"]["provenance"]["backend"], "deterministic");
    assert_eq!(p["payload"]["source"], include_str!("../../core/fixtures/goal1.dsl"));
}

#[tokio::test]
async fn goal1_zero_noise_session() {
    let h = Harness::new();
    let (prog, sc) = h.goal1().await;
    let id = h.session(&prog, &sc, 1000.0).await;
    let (st, e) = h.call("GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["code"], "session_not_finished");
    let (st, _) = h.call("POST", &format!("/sessions/{id}/start"), None).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let (st, e) = h.call("POST", &format!("/sessions/{id}/start"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["code"], "already_started");

    let events = h.events(&format!("/sessions/{id}/events")).await;
    assert_eq!(count(&events, "announced"), 11);
    assert_eq!(count(&events, "completed"), 8);
    assert_eq!(count(&events, "timed_out"), 0);
    assert_gapless(&events, 1);
    assert!(events.iter().filter(|(_, v)| v.get("seq").is_some()).all(|(_, v)| v["session"] == id.as_str()));
    assert_eq!(events.last().unwrap().0, "end");

    let tail = h.events(&format!("/sessions/{id}/events?from=10")).await;
    assert_gapless(&tail, 10);
    assert_eq!(tail[0].1, events[9].1);

    let (st, r) = h.call("GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(r["session"]["status"], "done");
    let pacing = r["outcome"]["pacing"].as_array().unwrap();
    assert_eq!(pacing.len(), 8);
    assert!(pacing.iter().all(|p| p["verdict"] == "adequate"));
    let (_, health) = h.call("GET", "/health", None).await;
    assert_eq!(health["counts"]["session_log"], 1);

    let labels: Vec<Value> = r["outcome"]["log"]["steps"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["monitored"] == true)
        .map(|s| json!({"session": id, "step": s["step"], "expected": "ShouldComplete"}))
        .collect();
    let (st, rep) = h.call("POST", "/eval", Some(json!({"sessions": [id], "prelabels": labels}))).await;
    assert_eq!(st, StatusCode::CREATED, "{rep}");
    assert_eq!(rep["payload"]["report"]["accuracy"]["point"], 1.0);
    assert_eq!(rep["payload"]["report"]["matrix"]["tp"], 8);
    assert_eq!(rep["payload"]["report"]["pacing"]["adequate"], 8);
}

#[tokio::test]
async fn subscriber_joining_mid_session_gets_backlog_then_tail() {
    let h = Harness::new();
    let (prog, sc) = h.goal1().await;
    let id = h.session(&prog, &sc, 40.0).await;
    h.call("POST", &format!("/sessions/{id}/start"), None).await;
    loop {
        let (_, v) = h.call("GET", &format!("/sessions/{id}"), None).await;
        if v["events"].as_u64().unwrap() >= 5 {
            assert_eq!(v["status"], "running");
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let events = h.events(&format!("/sessions/{id}/events")).await;
    assert_gapless(&events, 1);
    assert_eq!(count(&events, "completed"), 8);
}

#[tokio::test]
async fn concurrent_sessions_do_not_mix() {
    let h = Arc::new(Harness::new());
    let (prog, sc) = h.goal1().await;
    let a = h.session(&prog, &sc, 500.0).await;
    let b = h.session(&prog, &sc, 500.0).await;
    h.call("POST", &format!("/sessions/{a}/start"), None).await;
    h.call("POST", &format!("/sessions/{b}/start"), None).await;
    let (ua, ub) = (format!("/sessions/{a}/events"), format!("/sessions/{b}/events"));
    let (ea, eb) = tokio::join!(h.events(&ua), h.events(&ub));
    for (events, id) in [(&ea, &a), (&eb, &b)] {
        assert_gapless(events, 1);
        assert!(events.iter().filter(|(_, v)| v.get("seq").is_some()).all(|(_, v)| v["session"] == id.as_str()));
    }
}

#[tokio::test]
async fn session_rejects_infeasible_scenario_before_start() {
    let h = Harness::new();
    let (prog, _) = h.goal1().await;
    let sc = Scenario {
        program_id: "g1".into(),
        profile: PatientProfile::standardized(),
        script: BehaviorScript::default(),
        noise: NoiseModel::none(1),
        frame_hz: 30,
    };
    let (_, sc) = h.call("POST", "/scenarios", Some(json!(sc))).await;
    let (st, e) = h
        .call("POST", "/sessions", Some(json!({"program_id": prog, "scenario_id": sc["id"], "rt_factor": 10.0})))
        .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(e["message"].as_str().unwrap().contains("no entry"), "{e}");
}

#[tokio::test]
async fn retrofit_endpoint() {
    let h = Harness::new();
    let rx = corpus().into_iter().find(|r| r.id == "g5-t8").unwrap();
    let (_, posted) = h.call("POST", "/prescriptions", Some(json!(rx))).await;
    let (st, v) = h
        .call("POST", "/retrofit", Some(json!({"prescription_id": posted["id"], "template_id": "goal-5"})))
        .await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    assert_eq!(v["payload"]["verdict"]["translatable"], false);
    assert!(v["payload"]["verdict"]["categories"].as_array().unwrap().contains(&json!("NewEquipmentUse")));
    let (st, _) = h.call("POST", "/retrofit", Some(json!({"prescription_id": posted["id"], "template_id": 42}))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}
