//! TCP transport: one task per connection, frames in, frames out.

use crate::gateway::Gateway;
use crate::protocol::{read_frame_bytes, write_frame, Body, ErrorCode, WireMessage};
use std::io;
use std::sync::Arc;
use std::time::Duration;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;

/// Serves until the listener fails. Also runs the idle-session reaper.
pub async fn serve(listener: TcpListener, gateway: Arc<Gateway>) -> io::Result<()> {
    let reaper = {
        let gateway = gateway.clone();
        let period = (gateway.config().idle_timeout / 10).clamp(Duration::from_millis(10), Duration::from_secs(5));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let closed = gateway.reap_idle();
                if closed > 0 {
                    tracing::info!(closed, "closed idle sessions");
                }
            }
        })
    };
    let result = loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                let gateway = gateway.clone();
                tokio::spawn(async move {
                    if let Err(e) = handle_connection(stream, gateway).await {
                        tracing::debug!(%peer, error = %e, "connection closed with error");
                    }
                });
            }
            Err(e) => break Err(e),
        }
    };
    reaper.abort();
    result
}

pub async fn handle_connection(stream: TcpStream, gateway: Arc<Gateway>) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let (mut reader, mut writer) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<WireMessage>();
    let writer_task = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            write_frame(&mut writer, &msg).await?;
        }
        Ok::<_, io::Error>(())
    });
    let read_result = loop {
        let bytes = match read_frame_bytes(&mut reader).await {
            Ok(Some(bytes)) => bytes,
            Ok(None) => break Ok(()),
            Err(e) => break Err(e),
        };
        match serde_json::from_slice::<WireMessage>(&bytes) {
            Ok(msg) => {
                // Session work is short and CPU-bound; run it inline.
                gateway.handle(msg, Some(&tx));
            }
            Err(e) => {
                let _ = tx.send(WireMessage {
                    session: None,
                    seq: 0,
                    reply_to: None,
                    body: Body::error(ErrorCode::BadRequest, format!("malformed message: {e}")),
                });
            }
        }
    };
    gateway.forget_connection(&tx);
    drop(tx);
    writer_task.await.map_err(io::Error::other)??;
    read_result
}
