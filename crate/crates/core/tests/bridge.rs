use std::path::PathBuf;

use causagen::graph::{build_plan, PlanGraph};
use causagen::sampler::{BridgeClient, Generator, GenerationRequest};
use causagen::scm::builtin_collider;
use causagen::{Error, Strategy, Table};
use proptest::prelude::*;

fn mock(args: &str) -> String {
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mock_bridge.py");
    format!("python3 {} {args}", script.display())
}

fn train() -> Table {
    builtin_collider(1e-2).unwrap().sample(30, 5)
}

fn reverse_plan(t: &Table) -> causagen::GenerationPlan {
    let mut order: Vec<&str> = t.names().collect();
    order.reverse();
    build_plan(Strategy::Vanilla, &order, PlanGraph::None).unwrap()
}

#[test]
fn round_trip_returns_training_rows() {
    let t = train();
    let plan = reverse_plan(&t);
    let mut client = BridgeClient::spawn(&mock("")).unwrap();
    assert_eq!(client.model(), "mock-echo/1");
    let req = GenerationRequest {
        train: &t,
        plan: &plan,
        n_samples: 50,
        seed: 9,
        permutations: 2,
    };
    let out = client.generate(&req).unwrap();
    assert_eq!(out.n_rows(), 50);
    assert_eq!(out.schema(), t.schema());
    let rows: Vec<Vec<f64>> = (0..t.n_rows()).map(|r| t.row(r)).collect();
    for r in 0..out.n_rows() {
        assert!(rows.contains(&out.row(r)), "row {r} is not a training row");
    }
    // same seed, same answer
    assert_eq!(client.generate(&req).unwrap(), out);
    client.shutdown().unwrap();
}

#[test]
fn request_carries_plan_permutations_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("requests.jsonl");
    let t = train();
    let plan = reverse_plan(&t);
    {
        let gen = Generator::bridge(&mock(&log.display().to_string())).unwrap();
        gen.generate(&GenerationRequest {
            train: &t,
            plan: &plan,
            n_samples: 4,
            seed: 1234,
            permutations: 3,
        })
        .unwrap();
    }
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["op"], "handshake");
    assert_eq!(lines[0]["protocol"], 1);
    let g = &lines[1];
    assert_eq!(g["op"], "generate");
    assert_eq!(g["permutations"], 3);
    assert_eq!(g["seed"], 1234);
    assert_eq!(g["n_samples"], 4);
    assert_eq!(g["plan"]["strategy"], "vanilla");
    assert_eq!(g["plan"]["order"], serde_json::json!(["X3", "X2", "X1", "X0"]));
    assert_eq!(g["schema"][0]["name"], "X0");
    let wire: Vec<Vec<f64>> = serde_json::from_value(g["train"].clone()).unwrap();
    assert_eq!(wire.len(), t.n_rows());
    assert_eq!(wire[7], t.row(7));
    assert_eq!(lines.last().unwrap()["op"], "shutdown");
}

#[test]
fn protocol_mismatch_is_rejected() {
    let err = BridgeClient::spawn(&mock("--protocol 2")).unwrap_err();
    assert!(err.to_string().contains("protocol mismatch"), "{err}");
}

#[test]
fn missing_executable_fails_cleanly() {
    let err = BridgeClient::spawn("/nonexistent/bridge-binary").unwrap_err();
    assert!(matches!(err, Error::Bridge(_)));
}

fn generate_with_mode(mode: &str) -> Error {
    let t = train();
    let plan = reverse_plan(&t);
    let mut client = BridgeClient::spawn(&mock(&format!("--mode {mode}"))).unwrap();
    client
        .generate(&GenerationRequest {
            train: &t,
            plan: &plan,
            n_samples: 5,
            seed: 0,
            permutations: 1,
        })
        .unwrap_err()
}

#[test]
fn error_replies_surface() {
    let e = generate_with_mode("fail");
    assert!(e.to_string().contains("model exploded"), "{e}");
    let e = generate_with_mode("short");
    assert!(e.to_string().contains("does not have 4 values"), "{e}");
    let e = generate_with_mode("garbage");
    assert!(e.to_string().contains("malformed reply"), "{e}");
    let e = generate_with_mode("exit");
    assert!(e.to_string().contains("closed"), "{e}");
}

#[test]
fn invalid_request_never_reaches_the_wire() {
    let t = train();
    let plan = build_plan(Strategy::Vanilla, &["X0", "X1"], PlanGraph::None).unwrap();
    let mut client = BridgeClient::spawn(&mock("")).unwrap();
    let err = client
        .generate(&GenerationRequest {
            train: &t,
            plan: &plan,
            n_samples: 5,
            seed: 0,
            permutations: 1,
        })
        .unwrap_err();
    assert!(matches!(err, Error::InvalidPlan(_) | Error::NotAPermutation(_)), "{err}");
    client.shutdown().unwrap();
}

#[test]
fn shutdown_after_shutdown_reply() {
    let client = BridgeClient::spawn(&mock("")).unwrap();
    client.shutdown().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whatever a bridge prints in reply to the handshake, the client
    /// returns an error or a client, never panics.
    #[test]
    fn arbitrary_handshake_replies(line in "[ -~]{0,80}") {
        let dir = tempfile::tempdir().unwrap();
        let reply = dir.path().join("reply");
        std::fs::write(&reply, format!("{line}\n")).unwrap();
        let cmd = format!("cat '{}'; cat > /dev/null", reply.display());
        let got = BridgeClient::spawn(&cmd);
        let accepted = serde_json::from_str::<serde_json::Value>(&line)
            .map(|v| v["ok"] == true && v["protocol"] == 1)
            .unwrap_or(false);
        prop_assert_eq!(got.is_ok(), accepted);
    }

    #[test]
    fn arbitrary_json_samples(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 0..6), 0..6)) {
        let dir = tempfile::tempdir().unwrap();
        let reply = dir.path().join("reply");
        let samples = serde_json::json!({"ok": true, "samples": rows});
        std::fs::write(&reply, format!("{{\"ok\":true,\"protocol\":1}}\n{samples}\n")).unwrap();
        let cmd = format!("cat '{}'; cat > /dev/null", reply.display());
        let mut client = BridgeClient::spawn(&cmd).unwrap();
        let t = train();
        let plan = reverse_plan(&t);
        let got = client.generate(&GenerationRequest { train: &t, plan: &plan, n_samples: 3, seed: 0, permutations: 1 });
        let well_formed = rows.len() == 3 && rows.iter().all(|r| r.len() == 4);
        prop_assert_eq!(got.is_ok(), well_formed);
    }
}
