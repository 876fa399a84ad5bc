mod common;

use common::{spawn, test_config, SharedBuf};
use sidewalk_analytics::{AppEvent, EventKind};
use sidewalk_core::harness::train::TrainConfig;
use sidewalk_core::agents::Algorithm;
use sidewalk_core::harness::train;
use sidewalk_core::scenario::ScenarioConfig;
use sidewalk_core::Action;
use sidewalk_gateway::{Body, Client, ClientError, ClientSessionView, ErrorCode, SessionMode, WalkStatus};

fn server_error(r: Result<impl std::fmt::Debug, ClientError>) -> (ErrorCode, String) {
    match r {
        Err(ClientError::Server { code, message }) => (code, message),
        other => panic!("expected a server error, got {other:?}"),
    }
}

#[tokio::test]
async fn standard_walk_starts_at_the_near_end() {
    let buf = SharedBuf::default();
    let (addr, _) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    let snap = c.create("standard", SessionMode::HumanSteered, None).await.unwrap();
    let standard = ScenarioConfig::standard();
    assert_eq!(snap.goal_distance, standard.length_m - standard.start_x_m);
    assert!((standard.length_m - 152.4).abs() < 1e-9);
    assert_eq!(snap.status, WalkStatus::Live);
    assert_eq!(snap.tick, 0);
    // the snapshot carries no obstacle list, only the sensed report
    let json = serde_json::to_value(&snap).unwrap();
    assert_eq!(
        json.as_object().unwrap().keys().cloned().collect::<Vec<_>>(),
        ["goal_distance", "mode", "report", "sidewalk_width", "status", "tick", "walker"]
    );
}

#[tokio::test]
async fn create_errors() {
    let buf = SharedBuf::default();
    let (addr, _) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    let (code, message) = server_error(c.create("nowhere", SessionMode::HumanSteered, None).await);
    assert_eq!(code, ErrorCode::ScenarioNotFound);
    assert_eq!(message, "scenario not found");
    let (code, _) = server_error(c.create("standard", SessionMode::AgentSteered, None).await);
    assert_eq!(code, ErrorCode::CheckpointRequired);
    let (code, _) = server_error(c.create("standard", SessionMode::AgentSteered, Some("missing")).await);
    assert_eq!(code, ErrorCode::InvalidCheckpoint);
    let (code, message) = server_error(
        c.request(Body::CreateSession {
            protocol: 2,
            scenario: "standard".into(),
            mode: SessionMode::HumanSteered,
            checkpoint: None,
        })
        .await,
    );
    assert_eq!(code, ErrorCode::ProtocolMismatch);
    assert!(message.contains("mismatch"));
}

#[tokio::test]
async fn forward_into_a_cone_ends_the_walk() {
    let buf = SharedBuf::default();
    let (addr, _) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    c.create("cone", SessionMode::HumanSteered, None).await.unwrap();
    let mut last = None;
    for _ in 0..10 {
        let Body::StepResult { reward, collided, terminal, .. } = c.act(Some(Action::Forward)).await.unwrap().body
        else {
            panic!("act answered by step_result")
        };
        if terminal {
            last = Some((reward, collided));
            break;
        }
        assert_eq!(reward, 1);
    }
    assert_eq!(last, Some((-1, true)));
    let (code, message) = server_error(c.act(Some(Action::Forward)).await);
    assert_eq!(code, ErrorCode::SessionTerminated);
    assert_eq!(message, "session terminated");
    let view = ClientSessionView::replay(&c.received);
    assert_eq!(view.last_reward, Some(-1));
    let events = buf.events();
    assert!(events.iter().any(|e| matches!(e.kind, EventKind::AppLog { event: AppEvent::Collision, .. })));
    assert!(events.iter().any(|e| matches!(e.kind, EventKind::RecognizedObstacle { .. })));
}

#[tokio::test]
async fn chat_names_the_hydrant() {
    let buf = SharedBuf::default();
    let (addr, _) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    c.create("hydrant", SessionMode::HumanSteered, None).await.unwrap();
    let reply = c.say("What is there?").await.unwrap();
    assert!(reply.starts_with("I see fire hydrant 3.0 meters ahead"), "{reply}");
    assert_eq!(c.say("Is it close?").await.unwrap(), "about 3.0 meters away");
    assert_eq!(c.say("hey").await.unwrap(), "Hello, I am here and ready to guide you.");
    assert!(c.say("flibbertigibbet").await.unwrap().starts_with("Sorry"));
    let texts: Vec<_> = buf
        .events()
        .into_iter()
        .filter_map(|e| match e.kind {
            EventKind::ConversationText { text, .. } => Some(text),
            _ => None,
        })
        .collect();
    assert_eq!(texts.len(), 8);
    assert_eq!(texts[0], "What is there?");
}

#[tokio::test]
async fn sequence_numbers_are_checked() {
    let buf = SharedBuf::default();
    let (addr, gateway) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    c.create("empty", SessionMode::HumanSteered, None).await.unwrap();
    let id = c.session.clone().unwrap();
    let stale = sidewalk_gateway::WireMessage::request(Some(&id), 7, Body::KeepAlive {});
    let reply = gateway.handle(stale, None);
    assert!(matches!(reply.body, Body::Error { code: ErrorCode::BadSequence, .. }));
    // the rejection reaches the session's connection too, so the client's
    // view of server seqs stays gapless
    c.keep_alive().await.unwrap();
    let seqs: Vec<u64> = c.received.iter().map(|m| m.seq).collect();
    assert_eq!(seqs, [0, 1, 2]);
    assert_eq!(c.received[1].reply_to, Some(7));
    assert!(matches!(c.received[2].body, Body::KeepAlive {}));
}

#[tokio::test]
async fn ending_and_keep_alive_on_dead_sessions() {
    let buf = SharedBuf::default();
    let (addr, gateway) = spawn(test_config(&buf)).await;
    let mut c = Client::connect(addr).await.unwrap();
    c.create("empty", SessionMode::HumanSteered, None).await.unwrap();
    c.keep_alive().await.unwrap();
    c.end().await.unwrap();
    assert_eq!(gateway.session_count(), 0);
    let (code, _) = server_error(c.keep_alive().await);
    assert_eq!(code, ErrorCode::UnknownSession);
    let kinds: Vec<&str> = buf.events().iter().map(|e| e.kind.name()).collect();
    assert_eq!(kinds, ["app_log", "keep_alive", "app_log"]);
}

#[tokio::test]
async fn agent_steered_walk_uses_the_checkpoint() {
    let buf = SharedBuf::default();
    let mut cfg = test_config(&buf);
    let scenario = ScenarioConfig::empty();
    let out = train(&TrainConfig::new(Algorithm::QLearning, 30, 3), &scenario).unwrap();
    cfg.checkpoints.insert("q".into(), out.checkpoint);
    let (addr, _) = spawn(cfg).await;
    let mut c = Client::connect(addr).await.unwrap();
    c.create("empty", SessionMode::AgentSteered, Some("q")).await.unwrap();
    let (code, _) = server_error(c.act(Some(Action::Forward)).await);
    assert_eq!(code, ErrorCode::WrongMode);
    let reply = c.act(None).await.unwrap();
    assert!(matches!(reply.body, Body::StepResult { .. }));
    let mut h = Client::connect(addr).await.unwrap();
    h.create("empty", SessionMode::HumanSteered, None).await.unwrap();
    let (code, _) = server_error(h.act(None).await);
    assert_eq!(code, ErrorCode::WrongMode);
}
