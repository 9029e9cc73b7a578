//! Live simulation service: one session per WebSocket connection.
//!
//! Each connection gets three tasks. The reader parses frames and forwards
//! commands; the session task owns the world and ticks it on a timer; the
//! writer drains outgoing messages. Nothing in the session task waits on
//! the socket.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use snakeforge_core::model::RobotAssembly;
use snakeforge_core::sim::{
    parse_client_message, ClientMessage, InitialConditions, ServerMessage, Session, PROTOCOL_VERSION,
};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub assembly: RobotAssembly,
    pub tick_rate_hz: f64,
    /// Simulated seconds per wall-clock second.
    pub speedup: f64,
    pub initial: InitialConditions,
    /// Where to write each session's log when it closes.
    pub record: Option<PathBuf>,
}

struct Shared {
    config: ServiceConfig,
    next_id: AtomicU64,
}

pub fn router(config: ServiceConfig) -> Router {
    let shared = Arc::new(Shared {
        config,
        next_id: AtomicU64::new(1),
    });
    Router::new()
        .route("/", get(upgrade))
        .route("/ws", get(upgrade))
        .with_state(shared)
}

pub async fn serve(listener: TcpListener, config: ServiceConfig) -> anyhow::Result<()> {
    let addr = listener.local_addr()?;
    tracing::info!(%addr, rate = config.tick_rate_hz, "serving");
    axum::serve(listener, router(config)).await?;
    Ok(())
}

pub async fn bind(addr: SocketAddr) -> anyhow::Result<TcpListener> {
    Ok(TcpListener::bind(addr).await?)
}

/// Log path for a session. The first session uses the path as given.
pub fn record_path(base: &std::path::Path, id: u64) -> PathBuf {
    if id == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("session");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{id}.{ext}"),
        None => format!("{stem}-{id}"),
    };
    base.with_file_name(name)
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    let id = shared.next_id.fetch_add(1, Ordering::Relaxed);
    ws.on_upgrade(move |socket| connection(socket, shared, id))
}

async fn connection(socket: WebSocket, shared: Arc<Shared>, id: u64) {
    let cfg = &shared.config;
    let mut session = match Session::new(
        id,
        cfg.assembly.clone(),
        cfg.tick_rate_hz,
        cfg.initial.clone(),
        cfg.record.is_some(),
    ) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!(id, error = %e, "cannot start session");
            return;
        }
    };
    tracing::info!(id, "session opened");

    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<ServerMessage>();
    let (cmd_tx, mut cmd_rx) = mpsc::unbounded_channel();

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink.send(Message::Text(msg.to_json().into())).await.is_err() {
                break;
            }
        }
    });

    let reader_out = out_tx.clone();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(text) => match parse_client_message(text.as_str()) {
                    Ok(ClientMessage::Command(cmd)) => {
                        if cmd_tx.send(cmd).is_err() {
                            break;
                        }
                    }
                    Err((code, message)) => {
                        let _ = reader_out.send(ServerMessage::error(&code, message));
                    }
                },
                Message::Binary(_) => {
                    let _ = reader_out.send(ServerMessage::error("malformed", "binary frames are not supported"));
                }
                Message::Close(_) => break,
                _ => {}
            }
        }
    });

    let _ = out_tx.send(ServerMessage::Hello {
        version: PROTOCOL_VERSION,
    });
    let _ = out_tx.send(ServerMessage::Telemetry(session.world().telemetry()));

    let period = Duration::from_secs_f64(1.0 / (cfg.tick_rate_hz * cfg.speedup));
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    interval.tick().await;
    let mut reader_done = false;
    loop {
        tokio::select! {
            _ = interval.tick() => {
                match session.tick() {
                    Ok((record, rejected)) => {
                        for (_, err) in rejected {
                            let _ = out_tx.send(ServerMessage::error("rejected", err.to_string()));
                        }
                        if out_tx.send(ServerMessage::Telemetry(record)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = out_tx.send(ServerMessage::error("internal", e.to_string()));
                        break;
                    }
                }
            }
            cmd = cmd_rx.recv(), if !reader_done => match cmd {
                Some(cmd) => session.submit(cmd),
                None => reader_done = true,
            },
        }
        if reader_done || writer.is_finished() {
            break;
        }
    }
    drop(out_tx);
    reader.abort();
    let _ = writer.await;

    if let (Some(base), Some(log)) = (&cfg.record, session.take_log()) {
        let path = record_path(base, id);
        match std::fs::write(&path, log.to_jsonl()) {
            Ok(()) => tracing::info!(id, path = %path.display(), "session log written"),
            Err(e) => tracing::error!(id, error = %e, "cannot write session log"),
        }
    }
    tracing::info!(id, "session closed");
}
