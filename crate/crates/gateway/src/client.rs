//! A minimal client and the view a UI builds from server messages.

use crate::protocol::{
    read_frame, write_frame, Body, ErrorCode, SessionMode, StateSnapshot, WalkStatus, WalkerPose, WireMessage,
    PROTOCOL_VERSION,
};
use serde::{Deserialize, Serialize};
use sidewalk_core::freepath::ReportEntry;
use sidewalk_core::Action;
use std::io;
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpStream, ToSocketAddrs};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("connection: {0}")]
    Io(#[from] io::Error),
    #[error("server closed the connection")]
    Closed,
    #[error("server error {code:?}: {message}")]
    Server { code: ErrorCode, message: String },
    #[error("no session")]
    NoSession,
}

/// One connection driving one session, request by request.
pub struct Client {
    reader: OwnedReadHalf,
    writer: OwnedWriteHalf,
    pub session: Option<String>,
    next_seq: u64,
    /// Every server message received, in order.
    pub received: Vec<WireMessage>,
}

impl Client {
    pub async fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (reader, writer) = stream.into_split();
        Ok(Self { reader, writer, session: None, next_seq: 0, received: Vec::new() })
    }

    /// Sends `body` and waits for its reply; server errors become `Err`.
    pub async fn request(&mut self, body: Body) -> Result<WireMessage, ClientError> {
        let creating = matches!(body, Body::CreateSession { .. });
        let seq = if creating { 0 } else { self.next_seq };
        let msg = WireMessage::request(self.session.as_deref(), seq, body);
        write_frame(&mut self.writer, &msg).await?;
        if !creating {
            self.next_seq += 1;
        }
        loop {
            let reply = read_frame(&mut self.reader).await?.ok_or(ClientError::Closed)?;
            self.received.push(reply.clone());
            if reply.reply_to != Some(seq) {
                continue;
            }
            if let Body::Error { code, message } = reply.body {
                return Err(ClientError::Server { code, message });
            }
            if creating {
                self.session = reply.session.clone();
                self.next_seq = 1;
            }
            return Ok(reply);
        }
    }

    pub async fn create(
        &mut self,
        scenario: &str,
        mode: SessionMode,
        checkpoint: Option<&str>,
    ) -> Result<StateSnapshot, ClientError> {
        let body = Body::CreateSession {
            protocol: PROTOCOL_VERSION,
            scenario: scenario.to_string(),
            mode,
            checkpoint: checkpoint.map(str::to_string),
        };
        match self.request(body).await?.body {
            Body::SessionCreated { snapshot, .. } => Ok(snapshot),
            _ => unreachable!("create_session is answered by session_created or error"),
        }
    }

    pub async fn act(&mut self, action: Option<Action>) -> Result<WireMessage, ClientError> {
        self.require_session()?;
        self.request(Body::Act { action }).await
    }

    pub async fn say(&mut self, text: &str) -> Result<String, ClientError> {
        self.require_session()?;
        match self.request(Body::Say { text: text.to_string() }).await?.body {
            Body::AgentReply { text, .. } => Ok(text),
            _ => unreachable!("say is answered by agent_reply or error"),
        }
    }

    pub async fn keep_alive(&mut self) -> Result<(), ClientError> {
        self.require_session()?;
        self.request(Body::KeepAlive {}).await.map(drop)
    }

    pub async fn snapshot(&mut self) -> Result<StateSnapshot, ClientError> {
        self.require_session()?;
        match self.request(Body::StateSnapshot { snapshot: None }).await?.body {
            Body::StateSnapshot { snapshot: Some(s) } => Ok(s),
            _ => unreachable!("state_snapshot is answered with a snapshot or error"),
        }
    }

    pub async fn end(&mut self) -> Result<(), ClientError> {
        self.require_session()?;
        self.request(Body::EndSession { reason: None }).await.map(drop)
    }

    /// Waits for the next unsolicited message, such as an idle `end_session`.
    pub async fn next_push(&mut self) -> Result<WireMessage, ClientError> {
        let msg = read_frame(&mut self.reader).await?.ok_or(ClientError::Closed)?;
        self.received.push(msg.clone());
        Ok(msg)
    }

    fn require_session(&self) -> Result<(), ClientError> {
        self.session.as_ref().map(drop).ok_or(ClientError::NoSession)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

/// Everything a client shows, built only from server messages.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClientSessionView {
    pub session: Option<String>,
    pub walker: Option<WalkerPose>,
    pub goal_distance: Option<f64>,
    pub last_report: Vec<ReportEntry>,
    pub transcript: Vec<(Speaker, String)>,
    pub status: Option<WalkStatus>,
    pub last_reward: Option<i32>,
    pub last_error: Option<String>,
}

impl ClientSessionView {
    pub fn replay<'a>(messages: impl IntoIterator<Item = &'a WireMessage>) -> Self {
        let mut view = Self::default();
        for m in messages {
            view.apply(m);
        }
        view
    }

    fn take_snapshot(&mut self, s: &StateSnapshot) {
        self.walker = Some(s.walker);
        self.goal_distance = Some(s.goal_distance);
        self.status = Some(s.status);
    }

    pub fn apply(&mut self, msg: &WireMessage) {
        match &msg.body {
            Body::SessionCreated { snapshot, .. } => {
                self.session = msg.session.clone();
                self.take_snapshot(snapshot);
                self.last_report = snapshot.report.clone();
            }
            Body::StepResult { reward, report, snapshot, .. } => {
                self.take_snapshot(snapshot);
                self.last_report = report.clone();
                self.last_reward = Some(*reward);
            }
            Body::AgentReply { utterance, text, report, .. } => {
                self.transcript.push((Speaker::User, utterance.clone()));
                self.transcript.push((Speaker::Agent, text.clone()));
                if let Some(r) = report {
                    self.last_report = r.clone();
                }
            }
            Body::StateSnapshot { snapshot: Some(s) } => self.take_snapshot(s),
            Body::EndSession { .. } => self.status = Some(WalkStatus::Ended),
            Body::Error { message, .. } => self.last_error = Some(message.clone()),
            _ => {}
        }
    }
}
