//! Session registry and request handling, independent of the transport.

use crate::protocol::{
    Body, ErrorCode, SessionMode, StateSnapshot, WalkStatus, WalkerPose, WireMessage, PROTOCOL_VERSION,
};
use parking_lot::Mutex;
use rand::Rng;
use sidewalk_analytics::{AnalyticsEvent, AppEvent, EventKind, EventLog, LogError};
use sidewalk_core::agents::state::SidewalkObs;
use sidewalk_core::agents::Learner;
use sidewalk_core::checkpoint::{Checkpoint, Policy};
use sidewalk_core::freepath::{top_k_report, ReportEntry, DEFAULT_TOP_K};
use sidewalk_core::harness::{Environment, SidewalkEnv};
use sidewalk_core::scenario::ScenarioConfig;
use sidewalk_core::sensing::SensorConfig;
use sidewalk_soca::{DialogueState, SocaAgent};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use tokio::sync::mpsc::UnboundedSender;

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(600);

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;
pub type Outbox = UnboundedSender<WireMessage>;
pub type SharedLog = Arc<Mutex<EventLog<Box<dyn Write + Send>>>>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64))
}

pub struct GatewayConfig {
    pub scenarios: BTreeMap<String, ScenarioConfig>,
    pub checkpoints: BTreeMap<String, Checkpoint>,
    /// Sensor for human-steered walks; agent-steered walks use their
    /// checkpoint's sensor.
    pub sensor: SensorConfig,
    pub agent: SocaAgent,
    pub log: Option<SharedLog>,
    pub clock: Clock,
    pub idle_timeout: Duration,
}

impl GatewayConfig {
    /// The bundled scenarios, shipped dialogue model, no checkpoints and no
    /// log.
    pub fn new() -> Self {
        let scenarios = [ScenarioConfig::standard(), ScenarioConfig::empty()]
            .into_iter()
            .map(|s| (s.name.clone(), s))
            .collect();
        Self {
            scenarios,
            checkpoints: BTreeMap::new(),
            sensor: SensorConfig::default(),
            agent: SocaAgent::shipped(),
            log: None,
            clock: system_clock(),
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
        }
    }
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self::new()
    }
}

struct Session {
    id: String,
    mode: SessionMode,
    env: SidewalkEnv,
    obs: SidewalkObs,
    policy: Option<Policy>,
    dialogue: DialogueState,
    status: WalkStatus,
    created_at: u64,
    last_activity: u64,
    /// Last timestamp written to analytics for this session.
    last_event_ts: u64,
    next_in: u64,
    next_out: u64,
    outbox: Option<Outbox>,
}

impl Session {
    fn snapshot(&self) -> StateSnapshot {
        let world = self.env.world();
        StateSnapshot {
            mode: self.mode,
            walker: WalkerPose {
                x: world.walker.position.x,
                y: world.walker.position.y,
                heading: world.walker.heading,
            },
            goal_distance: world.goal_distance(),
            sidewalk_width: world.width,
            tick: world.tick,
            status: self.status,
            report: self.report(),
        }
    }

    fn report(&self) -> Vec<ReportEntry> {
        top_k_report(self.env.assessment(), DEFAULT_TOP_K)
    }

    fn is_live(&self) -> bool {
        self.status == WalkStatus::Live
    }

    /// Stamps and delivers a server message; seq numbers are assigned here,
    /// under the session lock, so they reach the outbox in order.
    fn emit(&mut self, reply_to: Option<u64>, body: Body, out: Option<&Outbox>) -> WireMessage {
        let msg = WireMessage { session: Some(self.id.clone()), seq: self.next_out, reply_to, body };
        self.next_out += 1;
        if let Some(out) = out.or(self.outbox.as_ref()) {
            let _ = out.send(msg.clone());
        }
        msg
    }
}

pub struct Gateway {
    cfg: GatewayConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

fn unattached(reply_to: u64, code: ErrorCode, message: impl Into<String>) -> WireMessage {
    WireMessage { session: None, seq: 0, reply_to: Some(reply_to), body: Body::error(code, message) }
}

fn new_token() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

impl Gateway {
    pub fn new(cfg: GatewayConfig) -> Self {
        Self { cfg, sessions: Mutex::new(HashMap::new()) }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.lock().keys().cloned().collect()
    }

    fn now(&self) -> u64 {
        (self.cfg.clock)()
    }

    fn log(&self, session: &mut Session, kind: EventKind) -> Result<(), LogError> {
        // Per-session analytics time never runs backwards, even if the
        // wall clock does.
        let ts = self.now().max(session.last_event_ts);
        session.last_event_ts = ts;
        match &self.cfg.log {
            Some(log) => log.lock().record(&AnalyticsEvent::new(ts, session.id.clone(), kind)),
            None => Ok(()),
        }
    }

    fn log_app(&self, session: &mut Session, event: AppEvent) -> Result<(), LogError> {
        self.log(session, EventKind::AppLog { event, detail: String::new() })
    }

    /// Handles one client message and returns the reply. The reply (and any
    /// push for the session) also goes to `out` when given.
    pub fn handle(&self, msg: WireMessage, out: Option<&Outbox>) -> WireMessage {
        let reply = self.dispatch(msg, out);
        if reply.session.is_none() {
            if let Some(out) = out {
                let _ = out.send(reply.clone());
            }
        }
        reply
    }

    fn dispatch(&self, msg: WireMessage, out: Option<&Outbox>) -> WireMessage {
        let req_seq = msg.seq;
        if let Body::CreateSession { protocol, scenario, mode, checkpoint } = msg.body {
            return self.create(req_seq, protocol, &scenario, mode, checkpoint.as_deref(), out);
        }
        let Some(id) = msg.session.as_deref() else {
            return unattached(req_seq, ErrorCode::BadRequest, "missing session");
        };
        let Some(handle) = self.sessions.lock().get(id).cloned() else {
            return unattached(req_seq, ErrorCode::UnknownSession, "unknown session");
        };
        let mut session = handle.lock();
        if req_seq != session.next_in {
            let expected = session.next_in;
            return session.emit(
                Some(req_seq),
                Body::error(ErrorCode::BadSequence, format!("expected seq {expected}, got {req_seq}")),
                out,
            );
        }
        session.next_in += 1;
        session.last_activity = self.now();
        let body = self.apply(&mut session, msg.body).unwrap_or_else(|err| err);
        let ended = matches!(body, Body::EndSession { .. });
        let reply = session.emit(Some(req_seq), body, out);
        drop(session);
        if ended {
            self.sessions.lock().remove(id);
        }
        reply
    }

    fn create(
        &self,
        req_seq: u64,
        protocol: u32,
        scenario: &str,
        mode: SessionMode,
        checkpoint: Option<&str>,
        out: Option<&Outbox>,
    ) -> WireMessage {
        if protocol != PROTOCOL_VERSION {
            return unattached(
                req_seq,
                ErrorCode::ProtocolMismatch,
                format!("protocol version mismatch: server speaks {PROTOCOL_VERSION}, client {protocol}"),
            );
        }
        let Some(scenario) = self.cfg.scenarios.get(scenario) else {
            return unattached(req_seq, ErrorCode::ScenarioNotFound, "scenario not found");
        };
        let (policy, sensor) = match (mode, checkpoint) {
            (SessionMode::AgentSteered, None) => {
                return unattached(req_seq, ErrorCode::CheckpointRequired, "agent_steered sessions need a checkpoint")
            }
            (SessionMode::HumanSteered, Some(_)) => {
                return unattached(req_seq, ErrorCode::BadRequest, "human_steered sessions take no checkpoint")
            }
            (SessionMode::AgentSteered, Some(name)) => match self.cfg.checkpoints.get(name) {
                Some(cp) => (Some(cp.policy()), cp.sensor.clone()),
                None => return unattached(req_seq, ErrorCode::InvalidCheckpoint, format!("checkpoint `{name}` not found")),
            },
            (SessionMode::HumanSteered, None) => (None, self.cfg.sensor.clone()),
        };
        let mut env = match SidewalkEnv::new(scenario.clone(), sensor) {
            Ok(env) => env,
            Err(e) => return unattached(req_seq, ErrorCode::Internal, e.to_string()),
        };
        let obs = env.reset(rand::rng().random());
        if mode == SessionMode::HumanSteered {
            // People set their own pace; the idle budget only shapes training.
            env.set_idle_budget(None);
        }
        let id = new_token();
        let now = self.now();
        let mut session = Session {
            id: id.clone(),
            mode,
            env,
            obs,
            policy,
            dialogue: DialogueState::new(id.clone()),
            status: WalkStatus::Live,
            created_at: now,
            last_activity: now,
            last_event_ts: 0,
            next_in: 1,
            next_out: 0,
            outbox: out.cloned(),
        };
        if let Err(e) = self.log_app(&mut session, AppEvent::SessionStart) {
            return unattached(req_seq, ErrorCode::Internal, format!("analytics log failure: {e}"));
        }
        let snapshot = session.snapshot();
        let reply = session.emit(Some(req_seq), Body::SessionCreated { protocol: PROTOCOL_VERSION, snapshot }, out);
        self.sessions.lock().insert(id, Arc::new(Mutex::new(session)));
        reply
    }

    fn apply(&self, s: &mut Session, body: Body) -> Result<Body, Body> {
        let log_err = |e: LogError| Body::error(ErrorCode::Internal, format!("analytics log failure: {e}"));
        let terminated = || Body::error(ErrorCode::SessionTerminated, "session terminated");
        match body {
            Body::Act { action } => {
                if !s.is_live() {
                    s.status = WalkStatus::Ended;
                    return Err(terminated());
                }
                let action = match (s.mode, action, &s.policy) {
                    (SessionMode::HumanSteered, Some(a), _) => a,
                    (SessionMode::AgentSteered, None, Some(policy)) => policy.greedy(&s.obs),
                    (SessionMode::HumanSteered, None, _) => {
                        return Err(Body::error(ErrorCode::WrongMode, "human_steered act needs an action"))
                    }
                    _ => return Err(Body::error(ErrorCode::WrongMode, "agent_steered sessions choose their own action")),
                };
                let step = s.env.step(action);
                s.obs = step.obs;
                let report = s.report();
                for entry in &report {
                    let kind = match entry.label {
                        Some(kind) => EventKind::RecognizedObstacle { label: kind.display_name(), distance: entry.distance },
                        None => EventKind::UnrecognizedObstacle { distance: entry.distance },
                    };
                    self.log(s, kind).map_err(log_err)?;
                }
                if step.terminal {
                    s.status = if step.collided {
                        WalkStatus::Collided
                    } else if step.reached_goal {
                        WalkStatus::ReachedGoal
                    } else {
                        WalkStatus::Stalled
                    };
                    let event = if step.reached_goal { AppEvent::GoalReached } else { AppEvent::Collision };
                    if step.collided || step.reached_goal {
                        self.log_app(s, event).map_err(log_err)?;
                    }
                }
                Ok(Body::StepResult {
                    action,
                    reward: step.reward as i32,
                    collided: step.collided,
                    reached_goal: step.reached_goal,
                    terminal: step.terminal,
                    report,
                    snapshot: s.snapshot(),
                })
            }
            Body::Say { text } => {
                if !s.is_live() {
                    return Err(terminated());
                }
                let assessment = s.env.assessment().clone();
                let reply = self
                    .cfg
                    .agent
                    .respond(&mut s.dialogue, &text, Some(&assessment))
                    .map_err(|e| Body::error(ErrorCode::Internal, e.to_string()))?;
                let user = EventKind::ConversationText {
                    speaker: sidewalk_analytics::Speaker::User,
                    text: text.clone(),
                    intent: Some(reply.prediction.intent.clone()),
                };
                self.log(s, user).map_err(log_err)?;
                let agent = EventKind::ConversationText {
                    speaker: sidewalk_analytics::Speaker::Agent,
                    text: reply.text.clone(),
                    intent: None,
                };
                self.log(s, agent).map_err(log_err)?;
                Ok(Body::AgentReply {
                    utterance: text,
                    intent: reply.prediction.intent,
                    action: reply.action,
                    text: reply.text,
                    report: reply.report,
                })
            }
            Body::StateSnapshot { .. } => Ok(Body::StateSnapshot { snapshot: Some(s.snapshot()) }),
            Body::KeepAlive {} => {
                if !s.is_live() {
                    return Err(terminated());
                }
                self.log(s, EventKind::KeepAlive {}).map_err(log_err)?;
                Ok(Body::KeepAlive {})
            }
            Body::EndSession { reason } => {
                s.status = WalkStatus::Ended;
                self.log_app(s, AppEvent::SessionEnd).map_err(log_err)?;
                Ok(Body::EndSession { reason: reason.or_else(|| Some("client request".into())) })
            }
            other => Err(Body::error(ErrorCode::BadRequest, format!("`{}` is not a request", other.name()))),
        }
    }

    /// Ends sessions idle for longer than the timeout, pushing
    /// `end_session` to their connection. Returns how many were closed.
    pub fn reap_idle(&self) -> usize {
        let now = self.now();
        let timeout = self.cfg.idle_timeout.as_millis() as u64;
        let handles: Vec<(String, Arc<Mutex<Session>>)> =
            self.sessions.lock().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut closed = 0;
        for (id, handle) in handles {
            let mut s = handle.lock();
            if now.saturating_sub(s.last_activity) <= timeout {
                continue;
            }
            s.status = WalkStatus::Ended;
            if let Err(e) = self.log_app(&mut s, AppEvent::SessionEnd) {
                tracing::warn!(session = %id, error = %e, "could not log idle session end");
            }
            s.emit(None, Body::EndSession { reason: Some("idle timeout".into()) }, None);
            drop(s);
            self.sessions.lock().remove(&id);
            closed += 1;
        }
        closed
    }

    /// Detaches a closed connection from its sessions; they stay open until
    /// ended or reaped.
    pub fn forget_connection(&self, out: &Outbox) {
        let handles: Vec<(String, Arc<Mutex<Session>>)> =
            self.sessions.lock().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for (_, handle) in handles {
            let mut s = handle.lock();
            if s.outbox.as_ref().is_some_and(|o| o.same_channel(out)) {
                s.outbox = None;
            }
        }
    }

    /// Age of a session in milliseconds, if it exists.
    pub fn session_age(&self, id: &str) -> Option<u64> {
        let handle = self.sessions.lock().get(id).cloned()?;
        let created = handle.lock().created_at;
        Some(self.now().saturating_sub(created))
    }
}
