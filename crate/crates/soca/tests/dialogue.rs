use proptest::prelude::*;
use sidewalk_core::freepath::{assess_clusters, Cluster, FreePathAssessment};
use sidewalk_core::sensing::ScanPoint;
use sidewalk_core::world::HeightClass;
use sidewalk_core::ObstacleKind;
use sidewalk_soca::{next_action, DialogueError, DialogueState, DomainSpec, IntentPrediction, SocaAgent};
use std::collections::BTreeMap;

fn cluster(id: usize, range: f64, bearing: f64, label: Option<ObstacleKind>) -> Cluster {
    Cluster {
        id,
        points: vec![ScanPoint { range, bearing, height_class: HeightClass::AboveGround, source: None }],
        centroid_range: range,
        centroid_bearing: bearing,
        height_class: HeightClass::AboveGround,
        label_guess: label,
    }
}

fn world(clusters: Vec<Cluster>) -> FreePathAssessment {
    assess_clusters(clusters, 0.0, 0.4)
}

#[test]
fn reports_one_hydrant() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    let w = world(vec![cluster(0, 3.0, 0.0, Some(ObstacleKind::FireHydrant))]);
    let reply = agent.respond(&mut state, "What is there?", Some(&w)).unwrap();
    assert_eq!(reply.action, "action_report_obstacles");
    assert_eq!(reply.text, "I see fire hydrant 3.0 meters ahead");
}

#[test]
fn empty_world_is_free() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    let reply = agent.respond(&mut state, "Do you see anything?", Some(&world(vec![]))).unwrap();
    assert_eq!(reply.text, "the path ahead is free");
}

#[test]
fn seven_clusters_mention_five_nearest_first() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    let ranges = [7.0, 2.5, 9.1, 1.2, 4.4, 3.3, 8.0];
    let clusters = ranges.iter().enumerate().map(|(i, &r)| cluster(i, r, -0.5, Some(ObstacleKind::Tree))).collect();
    let reply = agent.respond(&mut state, "What is there?", Some(&world(clusters))).unwrap();
    let sentences: Vec<&str> = reply.text.split(". ").collect();
    assert_eq!(
        sentences,
        [
            "I see tree 1.2 meters left",
            "I see tree 2.5 meters left",
            "I see tree 3.3 meters left",
            "I see tree 4.4 meters left",
            "I see tree 7.0 meters left"
        ]
    );
    assert_eq!(reply.report.unwrap().len(), 5);
}

#[test]
fn distance_follows_report() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    let reply = agent.respond(&mut state, "Is it close?", None).unwrap();
    assert_eq!(reply.action, "action_report_distance");
    assert_eq!(reply.text, "I have not spotted anything yet");

    let near = world(vec![cluster(0, 1.4, 0.0, Some(ObstacleKind::Dumpster)), cluster(1, 6.0, 0.4, Some(ObstacleKind::Tree))]);
    agent.respond(&mut state, "What is there?", Some(&near)).unwrap();
    assert_eq!(agent.respond(&mut state, "Is it close?", None).unwrap().text, "yes, about 1.4 meters, close");
    assert_eq!(agent.respond(&mut state, "How far is the tree?", None).unwrap().text, "about 6.0 meters away");

    let far = world(vec![cluster(0, 6.0, 0.0, None)]);
    agent.respond(&mut state, "What is there?", Some(&far)).unwrap();
    assert_eq!(agent.respond(&mut state, "How far?", None).unwrap().text, "about 6.0 meters away");
}

#[test]
fn obstacle_query_needs_a_world() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    assert_eq!(agent.respond(&mut state, "What is there?", None).unwrap_err(), DialogueError::NoWorld);
    assert_eq!(state.turn_count, 0);
}

#[test]
fn scripted_conversation() {
    let agent = SocaAgent::shipped();
    let mut state = DialogueState::new("a");
    let w = world(vec![cluster(0, 3.0, 0.0, Some(ObstacleKind::ConstructionCone))]);
    let turns = [
        ("hello", "utter_greet"),
        ("Yes ready, are you ready?", "utter_ready"),
        ("let's go", "utter_start"),
        ("What is that?", "action_report_obstacles"),
        ("How far?", "action_report_distance"),
        ("qwerty zxcv", "utter_fallback"),
        ("bye now", "utter_bye"),
    ];
    for (text, action) in turns {
        let reply = agent.respond(&mut state, text, Some(&w)).unwrap();
        assert_eq!(reply.action, action, "{text}");
        assert!(!reply.text.is_empty());
    }
    assert_eq!(state.turn_count, 7);
    assert_eq!(state.last_intent.as_deref(), Some("bye"));
}

fn domain_intents() -> Vec<String> {
    DomainSpec::default_domain().intents
}

fn intent_seq() -> impl Strategy<Value = Vec<String>> {
    let mut names = domain_intents();
    names.push("fallback".into());
    prop::collection::vec(prop::sample::select(names), 0..20)
}

fn replay(intents: &[String], domain: &DomainSpec) -> Vec<String> {
    let mut state = DialogueState::new("p");
    intents
        .iter()
        .map(|i| {
            let p = if i == "fallback" {
                IntentPrediction::fallback(0.0)
            } else {
                IntentPrediction { intent: i.clone(), confidence: 1.0, entities: BTreeMap::new() }
            };
            let a = next_action(&state, &p, domain).unwrap();
            state.record(&p, &a, domain);
            a
        })
        .collect()
}

proptest! {
    #[test]
    fn actions_replay_identically(intents in intent_seq()) {
        let domain = DomainSpec::default_domain();
        let first = replay(&intents, &domain);
        prop_assert_eq!(&first, &replay(&intents, &domain));
        for a in &first {
            prop_assert!(domain.has_action(a));
        }
    }

    #[test]
    fn replies_never_leak_placeholders(
        utterances in prop::collection::vec("[a-zA-Z ,?']{0,30}", 1..12),
        ranges in prop::collection::vec(0.3f64..12.0, 0..8),
    ) {
        let agent = SocaAgent::shipped();
        let mut state = DialogueState::new("p");
        let clusters = ranges.iter().enumerate().map(|(i, &r)| cluster(i, r, 0.1 * i as f64 - 0.3, None)).collect();
        let w = world(clusters);
        for u in &utterances {
            let reply = agent.respond(&mut state, u, Some(&w)).unwrap();
            prop_assert!(!reply.text.contains('{') && !reply.text.contains('}'), "{}", reply.text);
            prop_assert!(!reply.text.is_empty());
        }
    }
}
