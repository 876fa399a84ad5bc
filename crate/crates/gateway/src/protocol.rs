//! The wire protocol.
//!
//! Every message is a frame: a 4-byte big-endian length followed by that
//! many bytes of UTF-8 JSON. The JSON object has these fields:
//!
//! | field      | type          | meaning                                              |
//! |------------|---------------|------------------------------------------------------|
//! | `type`     | string        | message type, see [`Body`]                           |
//! | `session`  | string / null | session token; null only on `create_session` and on errors about no session |
//! | `seq`      | integer       | per session and per direction, starting at 0          |
//! | `reply_to` | integer / null| on server messages, the `seq` of the request answered; null on pushes |
//! | `payload`  | object        | type-specific fields below                            |
//!
//! Client to server: `create_session`, `act`, `say`, `state_snapshot`,
//! `keep_alive`, `end_session`. Server to client: `session_created`,
//! `step_result`, `agent_reply`, `state_snapshot`, `keep_alive`,
//! `end_session`, `error`. Each request gets exactly one reply. The server
//! also pushes `end_session` when it closes an idle session.
//!
//! `create_session` carries `protocol`; a server speaking another version
//! answers with an `error` of code `protocol_mismatch`.

use serde::{Deserialize, Serialize};
use sidewalk_core::freepath::ReportEntry;
use sidewalk_core::Action;
use std::io;
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};

pub const PROTOCOL_VERSION: u32 = 1;
/// Frames larger than this are refused.
pub const MAX_FRAME_BYTES: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    /// The user picks every action.
    HumanSteered,
    /// A trained policy picks the actions; `act` only advances the walk.
    AgentSteered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkStatus {
    Live,
    Collided,
    ReachedGoal,
    /// The walk ran out of idle budget (agent-steered walks only).
    Stalled,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerPose {
    /// Meters down the sidewalk.
    pub x: f64,
    /// Meters from the left curb.
    pub y: f64,
    pub heading: f64,
}

/// What a client may know about a walk: the walker and what the sensor
/// reported, never the obstacle list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub mode: SessionMode,
    pub walker: WalkerPose,
    pub goal_distance: f64,
    pub sidewalk_width: f64,
    pub tick: u64,
    pub status: WalkStatus,
    /// Up to five nearest clusters from the latest scan.
    pub report: Vec<ReportEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ProtocolMismatch,
    ScenarioNotFound,
    CheckpointRequired,
    InvalidCheckpoint,
    UnknownSession,
    SessionTerminated,
    WrongMode,
    BadSequence,
    BadRequest,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Body {
    CreateSession {
        protocol: u32,
        scenario: String,
        mode: SessionMode,
        /// Name of a checkpoint the server was started with.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        checkpoint: Option<String>,
    },
    SessionCreated {
        protocol: u32,
        snapshot: StateSnapshot,
    },
    /// `action` is required when human steered and must be absent when
    /// agent steered.
    Act {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<Action>,
    },
    StepResult {
        action: Action,
        reward: i32,
        collided: bool,
        reached_goal: bool,
        terminal: bool,
        report: Vec<ReportEntry>,
        snapshot: StateSnapshot,
    },
    Say {
        text: String,
    },
    AgentReply {
        /// The utterance being answered.
        utterance: String,
        intent: String,
        action: String,
        text: String,
        /// Set when the reply described the clusters ahead.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        report: Option<Vec<ReportEntry>>,
    },
    /// Empty from the client, filled in from the server.
    StateSnapshot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot: Option<StateSnapshot>,
    },
    KeepAlive {},
    EndSession {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl Body {
    pub fn name(&self) -> &'static str {
        match self {
            Body::CreateSession { .. } => "create_session",
            Body::SessionCreated { .. } => "session_created",
            Body::Act { .. } => "act",
            Body::StepResult { .. } => "step_result",
            Body::Say { .. } => "say",
            Body::AgentReply { .. } => "agent_reply",
            Body::StateSnapshot { .. } => "state_snapshot",
            Body::KeepAlive {} => "keep_alive",
            Body::EndSession { .. } => "end_session",
            Body::Error { .. } => "error",
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Body::Error { code, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(default)]
    pub session: Option<String>,
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<u64>,
    #[serde(flatten)]
    pub body: Body,
}

impl WireMessage {
    pub fn request(session: Option<&str>, seq: u64, body: Body) -> Self {
        Self { session: session.map(str::to_string), seq, reply_to: None, body }
    }
}

pub async fn write_frame<W: AsyncWrite + Unpin>(out: &mut W, msg: &WireMessage) -> io::Result<()> {
    let bytes = serde_json::to_vec(msg)?;
    let len = u32::try_from(bytes.len()).ok().filter(|&n| n <= MAX_FRAME_BYTES).ok_or_else(|| {
        io::Error::new(io::ErrorKind::InvalidData, "frame too large")
    })?;
    out.write_all(&len.to_be_bytes()).await?;
    out.write_all(&bytes).await?;
    out.flush().await
}

/// Reads one frame's bytes; `None` on a clean end of stream.
pub async fn read_frame_bytes<R: AsyncRead + Unpin>(input: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len).await {
        Ok(_) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes is too large")));
    }
    let mut buf = vec![0u8; len as usize];
    input.read_exact(&mut buf).await?;
    Ok(Some(buf))
}

pub async fn read_frame<R: AsyncRead + Unpin>(input: &mut R) -> io::Result<Option<WireMessage>> {
    match read_frame_bytes(input).await? {
        Some(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
        None => Ok(None),
    }
}
