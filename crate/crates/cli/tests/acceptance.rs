//! Acceptance run: every numbered criterion prints one PASS or FAIL line,
//! and the test fails if any criterion does.
//!
//! The long ones (learning-score ordering and the 10,000-episode detection
//! table) take several minutes on one core.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sidewalk_analytics::{report, AnalyticsEvent, AppEvent, Thresholds};
use sidewalk_core::agents::mlp::{td_loss, td_loss_and_grad, Mlp, Sample};
use sidewalk_core::agents::{AgentRng, Algorithm, DqnConfig, TabularAgent, TdRule};
use sidewalk_core::freepath::{
    assess_clusters, cluster_points, top_k_report, DEFAULT_LINKAGE_EPS, DEFAULT_MIN_POINTS, DEFAULT_TOP_K,
};
use sidewalk_core::harness::mdp::TabularMdp;
use sidewalk_core::harness::{compare, pooled_detection, reference_detection_pct, run_episode, CalibrationConfig, Mode};
use sidewalk_core::scenario::{build_world, ScenarioConfig};
use sidewalk_core::sensing::{RangeScan, ScanPoint, SensorConfig};
use sidewalk_core::world::{Action, HeightClass, ObstacleKind, DEFAULT_DT};
use sidewalk_gateway::{serve, Body, Client, Gateway, GatewayConfig, SessionMode, WireMessage};
use sidewalk_soca::classify::{Classifier, TokenF1Classifier};
use sidewalk_soca::nlu::{parse_nlu, DEFAULT_NLU};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn run(n: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = started.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("criterion {n:>2} PASS  {name} ({secs:.1} s): {detail}"),
        Err(detail) => println!("criterion {n:>2} FAIL  {name} ({secs:.1} s): {detail}"),
    }
    outcome.is_ok()
}

// 1 ------------------------------------------------------------------------

fn scenario(name: &str, obstacles: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!(
        "format = 1\nname = \"{name}\"\nlength_m = 12.0\nwidth_m = 3.0\nseed = 1\n{obstacles}"
    ))
    .unwrap()
}

/// Repeats `action` until the walk ends; every step but the last must pay
/// +1, and the last pays `last`.
fn walk_until_end(s: &ScenarioConfig, action: Action, last: i32) -> Result<(bool, bool), String> {
    let mut world = build_world(s).map_err(|e| e.to_string())?;
    world.idle_budget = None;
    for _ in 0..10_000 {
        let out = world.step(action, DEFAULT_DT).map_err(|e| e.to_string())?;
        if out.terminal {
            ensure!(out.reward == last, "{}: final reward {} (expected {last})", s.name, out.reward);
            ensure!(world.step(Action::Stop, DEFAULT_DT).is_err(), "{}: stepped after the end", s.name);
            return Ok((out.collided, out.reached_goal));
        }
        ensure!(out.reward == 1, "{}: non-terminal reward {}", s.name, out.reward);
    }
    Err(format!("{}: walk never ended", s.name))
}

fn reward_contract() -> Outcome {
    let clear = scenario("clear", "");
    ensure!(walk_until_end(&clear, Action::Forward, 1)? == (false, true), "clear walk must reach the goal");
    ensure!(walk_until_end(&clear, Action::Left, -1)? == (true, false), "walking into the curb must collide");
    ensure!(walk_until_end(&clear, Action::Right, -1)? == (true, false), "walking into the road curb must collide");
    let mut kinds = 0;
    for kind in ObstacleKind::DETECTION_TABLE {
        let s = scenario(kind.as_str(), &format!("[[obstacles]]\nkind = \"{}\"\nx = 4.0\ny = 1.5\nradius = 0.3\n", kind.as_str()));
        ensure!(walk_until_end(&s, Action::Forward, -1)? == (true, false), "{kind} dead ahead must collide");
        kinds += 1;
    }
    // Random action sequences on the standard scenario.
    let mut rng = StdRng::seed_from_u64(1);
    let mut walks = 0;
    for seed in 0..300 {
        let mut world = build_world(&ScenarioConfig::standard().with_seed(seed)).unwrap();
        for _ in 0..200 {
            let a = Action::ALL[rng.random_range(0..Action::COUNT)];
            let out = world.step(a, DEFAULT_DT).unwrap();
            ensure!(out.reward == if out.collided { -1 } else { 1 }, "seed {seed}: reward {} for {out:?}", out.reward);
            ensure!(out.terminal == (out.collided || out.reached_goal || out.stalled), "seed {seed}: {out:?}");
            if out.terminal {
                break;
            }
        }
        walks += 1;
    }
    Ok(format!("clear, curb and {kinds} obstacle cases plus {walks} random walks"))
}

// 2 ------------------------------------------------------------------------

fn algorithm_ordering() -> Outcome {
    let seeds: Vec<u64> = (1..=20).collect();
    let cmp = compare(&ScenarioConfig::standard(), &SensorConfig::default(), &Algorithm::COMPARED, 200, &seeds)
        .map_err(|e| e.to_string())?;
    let (q, sarsa, dqn) = (cmp.score(Algorithm::QLearning), cmp.score(Algorithm::Sarsa), cmp.score(Algorithm::Dqn));
    let (lo, hi) = cmp.gap_ci(Algorithm::Dqn, Algorithm::QLearning, 10_000, 0);
    let detail = format!("{} seeds: dqn {dqn:.2}, sarsa {sarsa:.2}, q {q:.2}; dqn-q 95% CI [{lo:.2}, {hi:.2}]", seeds.len());
    ensure!(dqn >= sarsa && sarsa >= q, "ordering violated: {detail}");
    ensure!(lo > 0.0, "interval touches zero: {detail}");
    Ok(detail)
}

// 3 ------------------------------------------------------------------------

const GAMMA: f64 = 0.99;

fn value_iteration(mdp: &TabularMdp) -> Vec<[f64; Action::COUNT]> {
    let backup = |v: &[f64], s: usize, a: usize| -> f64 {
        mdp.transitions[s][a].iter().map(|o| o.prob * (o.reward + GAMMA * o.next.map_or(0.0, |n| v[n]))).sum()
    };
    let mut v = vec![0.0; mdp.states()];
    loop {
        let next: Vec<f64> =
            (0..mdp.states()).map(|s| (0..Action::COUNT).map(|a| backup(&v, s, a)).fold(f64::MIN, f64::max)).collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-12 {
            return (0..mdp.states()).map(|s| std::array::from_fn(|a| backup(&v, s, a))).collect();
        }
    }
}

fn q_learning_gap(mut mdp: TabularMdp, episodes: u64) -> f64 {
    let oracle = value_iteration(&mdp);
    let mut agent = TabularAgent::<usize>::new(TdRule::QLearning, 0.3, GAMMA);
    let mut rng = AgentRng::seed_from_u64(3);
    for e in 0..episodes {
        run_episode(&mut mdp, &mut agent, e, Mode::Learn { epsilon: 1.0 }, &mut rng, 1_000_000, false);
    }
    oracle
        .iter()
        .enumerate()
        .flat_map(|(s, row)| Action::ALL.map(|a| (agent.table.get(&s, a) - row[a.index()]).abs()))
        .fold(0.0, f64::max)
}

fn tabular_oracle() -> Outcome {
    let chain = q_learning_gap(TabularMdp::chain(), 20_000);
    let grid = q_learning_gap(TabularMdp::grid_5x20(), 400_000);
    let detail = format!("max |Q - Q*|: chain {chain:.2e}, 5x20 grid {grid:.2e}");
    ensure!(chain < 1e-2 && grid < 1e-2, "{detail}");
    Ok(detail)
}

// 4 ------------------------------------------------------------------------

fn relu_pattern(net: &Mlp, batch: &[Sample]) -> Vec<bool> {
    batch
        .iter()
        .flat_map(|s| {
            let t = net.trace(s.input);
            t.inputs[1..t.inputs.len() - 1].iter().flatten().map(|&x| x > 0.0).collect::<Vec<_>>()
        })
        .collect()
}

fn gradient_check() -> Outcome {
    let cfg = DqnConfig::default();
    let mut worst: f64 = 0.0;
    let (mut checked, mut kinks) = (0, 0);
    for seed in 0..2 {
        let mut rng = StdRng::seed_from_u64(seed);
        let net = Mlp::new(&cfg.layer_sizes(), &mut rng);
        let inputs: Vec<Vec<f64>> =
            (0..cfg.batch_size).map(|_| (0..cfg.inputs).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let batch: Vec<Sample> = inputs
            .iter()
            .map(|x| Sample { input: x, action: rng.random_range(0..Action::COUNT), target: rng.random_range(-2.0..2.0) })
            .collect();
        let analytic = td_loss_and_grad(&net, &batch).1.flat();
        let h = 1e-5;
        let mut probe = net.clone();
        for (k, &g) in analytic.iter().enumerate() {
            let orig = *probe.param_mut(k);
            *probe.param_mut(k) = orig + h;
            let (plus, plus_pattern) = (td_loss(&probe, &batch), relu_pattern(&probe, &batch));
            *probe.param_mut(k) = orig - h;
            let (minus, minus_pattern) = (td_loss(&probe, &batch), relu_pattern(&probe, &batch));
            *probe.param_mut(k) = orig;
            if plus_pattern != minus_pattern {
                kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h);
            let scale = g.abs().max(numeric.abs());
            if scale < 1e-6 {
                ensure!((g - numeric).abs() < 1e-8, "parameter {k}: {g} vs {numeric}");
                continue;
            }
            checked += 1;
            worst = worst.max((g - numeric).abs() / scale);
        }
    }
    let detail = format!("{checked} parameters over all layers, max relative error {worst:.2e} ({kinks} kink crossings skipped)");
    ensure!(worst < 1e-3, "{detail}");
    Ok(detail)
}

// 5 and 6 ------------------------------------------------------------------

fn detection_table() -> Result<BTreeMap<ObstacleKind, f64>, String> {
    let cfg = CalibrationConfig { eval_episodes: 3_334, eval_seed: 7, ..Default::default() };
    let table = pooled_detection(&ScenarioConfig::standard(), &SensorConfig::default(), &cfg).map_err(|e| e.to_string())?;
    let episodes = cfg.eval_episodes as usize * cfg.train_seeds.len();
    assert!(episodes >= 10_000);
    table.rows.iter().map(|r| Ok((r.kind, r.percent().ok_or(format!("{} never appeared", r.kind))?))).collect()
}

fn detection_rates(pct: &BTreeMap<ObstacleKind, f64>) -> Outcome {
    use ObstacleKind::*;
    let targets = reference_detection_pct();
    let mut parts = Vec::new();
    for (kind, target) in &targets {
        let got = pct[kind];
        parts.push(format!("{} {got:.1}", kind.as_str()));
        ensure!((got - target).abs() <= 10.0, "{kind}: {got:.1} vs {target}");
    }
    let detail = parts.join(", ");
    ensure!(pct.iter().all(|(k, &p)| *k == Pothole || p > pct[&Pothole]), "pothole not strictly lowest: {detail}");
    for k in [Dumpster, FireHydrant, ConstructionCone] {
        ensure!(pct[&k] >= pct[&ElectricScooter], "{k} below scooter: {detail}");
    }
    Ok(detail)
}

fn detection_average(pct: &BTreeMap<ObstacleKind, f64>) -> Outcome {
    let avg = pct.values().sum::<f64>() / pct.len() as f64;
    ensure!(pct.len() == 7, "{} kinds", pct.len());
    ensure!((avg - 81.4).abs() <= 5.0, "average {avg:.2}");
    Ok(format!("seven-kind average {avg:.2}"))
}

// 7 and 9 ------------------------------------------------------------------

fn random_points(rng: &mut StdRng, max: usize) -> Vec<ScanPoint> {
    let mut pts = Vec::new();
    let blobs = rng.random_range(0..10);
    for _ in 0..blobs {
        let (r0, b0) = (rng.random_range(0.5..9.0), rng.random_range(-0.7..0.7));
        for _ in 0..rng.random_range(1..25) {
            pts.push((r0 + rng.random_range(-0.4..0.4), b0 + rng.random_range(-0.08..0.08)));
        }
    }
    for _ in 0..rng.random_range(0..20) {
        pts.push((rng.random_range(0.2..10.0), rng.random_range(-0.78..0.78)));
    }
    pts.truncate(max);
    pts.into_iter()
        .map(|(range, bearing)| ScanPoint { range, bearing, height_class: HeightClass::AboveGround, source: None })
        .collect()
}

fn key(p: &ScanPoint) -> (u64, u64) {
    (p.range.to_bits(), p.bearing.to_bits())
}

fn closure_oracle(pts: &[ScanPoint]) -> BTreeSet<BTreeSet<(u64, u64)>> {
    let n = pts.len();
    let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.range * p.bearing.cos(), p.range * p.bearing.sin())).collect();
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| ((xy[i].0 - xy[j].0).powi(2) + (xy[i].1 - xy[j].1).powi(2)).sqrt() <= DEFAULT_LINKAGE_EPS).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    reach[i][j] |= reach[k][j];
                }
            }
        }
    }
    (0..n)
        .map(|i| (0..n).filter(|&j| reach[i][j]).map(|j| key(&pts[j])).collect::<BTreeSet<_>>())
        .filter(|c| c.len() >= DEFAULT_MIN_POINTS)
        .collect()
}

fn freepath_properties() -> Outcome {
    let empty = RangeScan::empty(&SensorConfig::default(), 0);
    let a = assess_clusters(cluster_points(&empty.points, DEFAULT_LINKAGE_EPS, DEFAULT_MIN_POINTS), 0.0, 0.4);
    ensure!(a.free && a.clusters.is_empty(), "empty scan is not free");

    let mut rng = StdRng::seed_from_u64(7);
    let (mut largest, mut clusters_seen) = (0, 0);
    for scan in 0..500 {
        let pts = random_points(&mut rng, 200);
        largest = largest.max(pts.len());
        let clusters = cluster_points(&pts, DEFAULT_LINKAGE_EPS, DEFAULT_MIN_POINTS);
        let got: BTreeSet<BTreeSet<(u64, u64)>> = clusters.iter().map(|c| c.points.iter().map(key).collect()).collect();
        ensure!(got == closure_oracle(&pts), "scan {scan}: clustering differs from the transitive closure");
        clusters_seen += clusters.len();

        let a = assess_clusters(clusters, 0.0, 0.4);
        for w in a.clusters.windows(2) {
            let (near, far) = (&w[0], &w[1]);
            let (tn, tf) = (a.threats[&near.id], a.threats[&far.id]);
            ensure!(near.centroid_range <= far.centroid_range, "scan {scan}: clusters out of order");
            ensure!(near.centroid_range == far.centroid_range || tn > tf, "scan {scan}: threat not strictly decreasing");
        }
    }
    Ok(format!("500 scans up to {largest} points, {clusters_seen} clusters, all equal to the closure oracle"))
}

fn top_five() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut crowded = 0;
    for case in 0..2_000 {
        let pts = random_points(&mut rng, 200);
        let a = assess_clusters(cluster_points(&pts, DEFAULT_LINKAGE_EPS, DEFAULT_MIN_POINTS), 0.0, 0.4);
        let report = top_k_report(&a, DEFAULT_TOP_K);
        ensure!(report.len() == a.clusters.len().min(5), "case {case}: {} entries for {} clusters", report.len(), a.clusters.len());
        ensure!(report.windows(2).all(|w| w[0].distance <= w[1].distance), "case {case}: not ascending");
        let mut ranges: Vec<f64> = a.clusters.iter().map(|c| c.centroid_range).collect();
        ranges.sort_by(f64::total_cmp);
        for (e, r) in report.iter().zip(&ranges) {
            ensure!((e.distance - r).abs() <= 0.05 + 1e-9, "case {case}: entry {} is not among the nearest", e.distance);
        }
        crowded += usize::from(a.clusters.len() > 5);
    }
    ensure!(crowded >= 100, "only {crowded} cases had more than five clusters");
    Ok(format!("2000 random assessments, {crowded} with more than five clusters"))
}

// 8 ------------------------------------------------------------------------

fn nlu_fidelity() -> Outcome {
    let data = parse_nlu(DEFAULT_NLU).map_err(|e| e.to_string())?;
    let counts: Vec<(&str, usize)> = data.intents.iter().map(|i| (i.name.as_str(), i.examples.len())).collect();
    ensure!(
        counts == [("greet", 5), ("greet_ask", 3), ("greet_normal", 3), ("find_obstacle", 8), ("find_distance", 5), ("bye", 3)],
        "counts {counts:?}"
    );
    let surfaces = |intent: &str| -> Vec<(String, String)> {
        data.intent(intent)
            .unwrap()
            .examples
            .iter()
            .flat_map(|ex| ex.entities.iter().map(|e| (e.surface.clone(), e.entity.clone())))
            .collect()
    };
    let obstacle: Vec<(String, String)> = ["obstacle", "there", "that", "anything", "There", "Here", "way", "way"]
        .iter()
        .map(|s| (s.to_string(), "obstacle".to_string()))
        .collect();
    let distance: Vec<(String, String)> =
        ["Where", "far", "reach", "close", "close"].iter().map(|s| (s.to_string(), "distance".to_string())).collect();
    ensure!(surfaces("find_obstacle") == obstacle, "find_obstacle spans {:?}", surfaces("find_obstacle"));
    ensure!(surfaces("find_distance") == distance, "find_distance spans {:?}", surfaces("find_distance"));
    for name in ["greet", "greet_ask", "greet_normal", "bye"] {
        ensure!(surfaces(name).is_empty(), "{name} has entities");
    }
    for ex in data.intents.iter().flat_map(|i| &i.examples) {
        for span in &ex.entities {
            ensure!(ex.text[span.start..span.end] == span.surface, "span offsets in {:?}", ex.text);
        }
    }
    let model = TokenF1Classifier::train(&data);
    let (mut right, mut total) = (0, 0);
    for intent in &data.intents {
        for ex in &intent.examples {
            total += 1;
            right += usize::from(model.classify(&ex.text).intent == intent.name);
        }
    }
    ensure!(right == total, "resubstitution {right}/{total}");
    Ok(format!("6 intents, 27 examples, 13 entity spans, resubstitution {right}/{total}"))
}

// 10 -----------------------------------------------------------------------

struct Planted {
    offline: u64,
    deadlock: u64,
    tries: u64,
    completion: u64,
}

/// One session with planted keep-alive outages, slow replies and retry
/// bursts; the expected metrics are tallied while planting.
fn plant(id: &str, rng: &mut StdRng, th: &Thresholds) -> (Vec<AnalyticsEvent>, Planted) {
    let start = rng.random_range(0..3u64) * 86_400_000 + 7_200_000;
    let mut events = vec![AnalyticsEvent::app(start, id, AppEvent::SessionStart)];
    let mut p = Planted { offline: 0, deadlock: 0, tries: 0, completion: 0 };

    let mut t = start;
    events.push(AnalyticsEvent::keep_alive(t, id));
    for _ in 0..rng.random_range(0..40) {
        let gap = if rng.random_bool(0.2) { rng.random_range(30_001..200_000) } else { rng.random_range(1_000..=30_000) };
        t += gap;
        events.push(AnalyticsEvent::keep_alive(t, id));
        if gap > th.gap_threshold_ms {
            p.offline += gap;
        }
    }

    let intents = ["greet", "find_obstacle", "find_distance", "bye"];
    let mut t = start + 100;
    let mut last_intent = usize::MAX;
    for _ in 0..rng.random_range(0..8) {
        let mut intent = rng.random_range(0..intents.len());
        if intent == last_intent {
            intent = (intent + 1) % intents.len();
        }
        last_intent = intent;
        let n = rng.random_range(1..=5u64);
        for _ in 0..n {
            let gap = rng.random_range(500..=7_000);
            let delay = rng.random_range(0..gap);
            events.push(AnalyticsEvent::user(t, id, "again", Some(intents[intent])));
            events.push(AnalyticsEvent::agent(t + delay, id, "reply"));
            if delay > th.deadlock_threshold_ms {
                p.deadlock += delay;
            }
            t += gap;
        }
        if n >= 2 {
            p.tries += n;
        }
        t += th.retry_window_ms + 1;
    }

    let end = events.iter().map(|e| e.ts).max().unwrap() + 500;
    if rng.random_bool(0.5) {
        let goal = start + rng.random_range(0..end - start);
        events.push(AnalyticsEvent::app(goal, id, AppEvent::GoalReached));
        p.completion = goal - start;
    } else {
        p.completion = end - start;
    }
    events.push(AnalyticsEvent::app(end, id, AppEvent::SessionEnd));
    (events, p)
}

fn analytics_oracle() -> Outcome {
    let th = Thresholds::default();
    let mut rng = StdRng::seed_from_u64(10);
    let mut sessions = 0;
    for round in 0..300 {
        let mut events = Vec::new();
        let mut planted = Vec::new();
        for i in 0..rng.random_range(1..5) {
            let id = format!("r{round}-s{i}");
            let (e, p) = plant(&id, &mut rng, &th);
            events.extend(e);
            planted.push((id, p));
        }
        events.sort_by_key(|e| e.ts);
        let r = report(&events, &th);
        for (id, p) in &planted {
            let m = &r.sessions[id];
            ensure!(m.offline_ms == p.offline, "{id}: offline {} vs {}", m.offline_ms, p.offline);
            ensure!(m.deadlock_ms == p.deadlock, "{id}: deadlock {} vs {}", m.deadlock_ms, p.deadlock);
            ensure!(m.user_tries == p.tries, "{id}: tries {} vs {}", m.user_tries, p.tries);
            ensure!(m.task_completion_ms == p.completion, "{id}: completion {} vs {}", m.task_completion_ms, p.completion);
            sessions += 1;
        }
    }
    Ok(format!("{sessions} planted sessions in 300 shared logs, all four metrics exact"))
}

// 11 -----------------------------------------------------------------------

async fn scripted_client(addr: std::net::SocketAddr, i: usize) -> Result<(String, Vec<WireMessage>, u64), String> {
    let e = |e: sidewalk_gateway::ClientError| e.to_string();
    let mut c = Client::connect(addr).await.map_err(e)?;
    c.create("empty", SessionMode::HumanSteered, None).await.map_err(e)?;
    let steps = i as u64 % 5 + 1;
    for k in 0..steps {
        c.act(Some(if k % 2 == 0 { Action::Forward } else { Action::Stop })).await.map_err(e)?;
        tokio::task::yield_now().await;
        if i % 3 == 0 {
            c.say("What is there?").await.map_err(e)?;
        }
        c.keep_alive().await.map_err(e)?;
    }
    c.snapshot().await.map_err(e)?;
    Ok((c.session.clone().unwrap(), c.received.clone(), steps))
}

fn gateway_isolation() -> Outcome {
    const SESSIONS: usize = 16;
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let addr = listener.local_addr().unwrap();
        let gateway = Arc::new(Gateway::new(GatewayConfig::new()));
        tokio::spawn(serve(listener, gateway.clone()));
        let handles: Vec<_> = (0..SESSIONS).map(|i| tokio::spawn(scripted_client(addr, i))).collect();
        let mut ids = BTreeSet::new();
        let mut messages = 0;
        for h in handles {
            let (id, received, steps) = h.await.map_err(|e| e.to_string())??;
            let seqs: Vec<u64> = received.iter().map(|m| m.seq).collect();
            ensure!(seqs == (0..received.len() as u64).collect::<Vec<_>>(), "{id}: seqs {seqs:?}");
            ensure!(received.iter().all(|m| m.session.as_deref() == Some(id.as_str())), "{id}: foreign message");
            ensure!(received.iter().skip(1).all(|m| m.reply_to == Some(m.seq)), "{id}: reply pairing");
            let Some(Body::StateSnapshot { snapshot: Some(last) }) = received.last().map(|m| &m.body) else {
                return Err(format!("{id}: no final snapshot"));
            };
            ensure!(last.tick == steps, "{id}: tick {} after {steps} steps", last.tick);
            messages += received.len();
            ids.insert(id);
        }
        ensure!(ids.len() == SESSIONS, "tokens are not unique");
        ensure!(gateway.session_count() == SESSIONS, "{} live sessions", gateway.session_count());
        Ok(format!("{SESSIONS} interleaved sessions, {messages} messages, gapless and isolated"))
    })
}

#[test]
fn acceptance() {
    let mut passed = Vec::new();
    passed.push(run(1, "reward contract", reward_contract));
    passed.push(run(2, "DQN >= SARSA >= Q-learning", algorithm_ordering));
    passed.push(run(3, "tabular value-iteration oracle", tabular_oracle));
    passed.push(run(4, "DQN gradient check", gradient_check));
    let started = Instant::now();
    let table = detection_table();
    println!("detection run: {:.0} s", started.elapsed().as_secs_f64());
    passed.push(run(5, "detection table", || detection_rates(table.as_ref().map_err(Clone::clone)?)));
    passed.push(run(6, "average detection", || detection_average(table.as_ref().map_err(Clone::clone)?)));
    passed.push(run(7, "free-path properties", freepath_properties));
    passed.push(run(8, "NLU corpus fidelity", nlu_fidelity));
    passed.push(run(9, "top-5 report", top_five));
    passed.push(run(10, "analytics planted oracle", analytics_oracle));
    passed.push(run(11, "gateway isolation and pairing", gateway_isolation));
    let failed: Vec<usize> = passed.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
