//! Walk sessions over a length-prefixed JSON protocol: a simulated
//! sidewalk, a conversation agent bound to it, and analytics for both.

pub mod client;
pub mod gateway;
pub mod protocol;
pub mod server;

pub use client::{Client, ClientError, ClientSessionView};
pub use gateway::{Gateway, GatewayConfig, SharedLog};
pub use protocol::{Body, ErrorCode, SessionMode, StateSnapshot, WalkStatus, WireMessage, PROTOCOL_VERSION};
pub use server::serve;
