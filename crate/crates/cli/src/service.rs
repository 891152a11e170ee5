//! Session service: one TCP connection per session, NDJSON both ways.
//!
//! The first line a client sends opens a session, unless it is a
//! `state_snapshot` request naming an existing session, which is answered
//! and the connection closed. Every session begins with a `state_snapshot`
//! carrying its id.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use anyhow::Result;
use meshkit::{open, Dialogue, EngineConfig, PlanLibrary, StateSnapshot, SystemAction, Utterance};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::OwnedWriteHalf;
use tokio::net::{TcpListener, TcpStream};

use crate::store::SessionLog;
use crate::wire::{MessageType, WireMessage};

pub struct ServiceConfig {
    pub library: Arc<PlanLibrary>,
    pub library_ref: String,
    pub engine: EngineConfig,
    pub sessions_dir: Option<PathBuf>,
}

/// Latest snapshot of every session this process has served.
pub type Registry = Arc<Mutex<HashMap<String, StateSnapshot>>>;

pub async fn serve(listener: TcpListener, config: Arc<ServiceConfig>) -> Result<()> {
    let registry = Registry::default();
    loop {
        let (stream, _) = listener.accept().await?;
        let config = Arc::clone(&config);
        let registry = Arc::clone(&registry);
        tokio::spawn(async move {
            if let Err(e) = handle_connection(stream, config, registry).await {
                eprintln!("connection error: {e:#}");
            }
        });
    }
}

struct Outbox {
    session_id: String,
    seq: u64,
    writer: OwnedWriteHalf,
}

impl Outbox {
    async fn send(&mut self, mut msg: WireMessage) -> Result<()> {
        self.seq += 1;
        msg.session_id = self.session_id.clone();
        msg.seq = self.seq;
        self.writer.write_all(msg.to_line().as_bytes()).await?;
        Ok(())
    }

    async fn action(&mut self, action: &SystemAction) -> Result<()> {
        for e in &action.events {
            self.send(WireMessage::event(e)).await?;
        }
        self.send(WireMessage::system_utterance(&action.utterance, action.focus.as_deref()))
            .await
    }
}

enum Flow {
    Continue,
    Stop(&'static str),
}

struct Live {
    dialogue: Box<dyn Dialogue>,
    out: Outbox,
    log: Option<SessionLog>,
    registry: Registry,
    started: Instant,
}

impl Live {
    fn now(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn publish(&mut self) -> Result<()> {
        self.registry
            .lock()
            .expect("registry lock")
            .insert(self.out.session_id.clone(), self.dialogue.snapshot());
        if let Some(log) = self.log.as_mut() {
            log.sync(self.dialogue.transcript())?;
        }
        Ok(())
    }

    async fn after_action(&mut self, result: Result<SystemAction, meshkit::EngineError>) -> Result<Flow> {
        match result {
            Ok(action) => {
                self.out.action(&action).await?;
                self.publish()?;
            }
            Err(e) => self.out.send(WireMessage::error(e.to_string())).await?,
        }
        Ok(if self.dialogue.is_ended() {
            Flow::Stop("disengaged")
        } else {
            Flow::Continue
        })
    }

    async fn handle(&mut self, line: &str) -> Result<Flow> {
        let msg: WireMessage = match serde_json::from_str(line) {
            Ok(m) => m,
            Err(e) => {
                self.out.send(WireMessage::error(format!("bad message: {e}"))).await?;
                return Ok(Flow::Continue);
            }
        };
        match msg.kind {
            MessageType::UserUtterance => {
                let Some(text) = msg.text() else {
                    self.out
                        .send(WireMessage::error("user_utterance needs payload.text"))
                        .await?;
                    return Ok(Flow::Continue);
                };
                self.out.send(WireMessage::user_utterance(text)).await?;
                let result = self.dialogue.handle_user_turn(&Utterance::user(text, self.now()));
                self.after_action(result).await
            }
            MessageType::StateSnapshot => {
                let snap = self.dialogue.snapshot();
                self.out.send(WireMessage::snapshot(&snap)).await?;
                Ok(Flow::Continue)
            }
            MessageType::End => Ok(Flow::Stop("client ended")),
            other => {
                self.out
                    .send(WireMessage::error(format!("clients cannot send {other:?} messages")))
                    .await?;
                Ok(Flow::Continue)
            }
        }
    }

    async fn timeout(&mut self) -> Result<Flow> {
        let result = self.dialogue.handle_timeout(self.now());
        self.after_action(result).await
    }
}

async fn handle_connection(stream: TcpStream, config: Arc<ServiceConfig>, registry: Registry) -> Result<()> {
    let (reader, writer) = stream.into_split();
    let mut lines = BufReader::new(reader).lines();
    let Some(first) = lines.next_line().await? else {
        return Ok(());
    };

    if let Ok(msg) = serde_json::from_str::<WireMessage>(&first) {
        if msg.kind == MessageType::StateSnapshot && !msg.session_id.is_empty() {
            let found = registry.lock().expect("registry lock").get(&msg.session_id).cloned();
            let mut out = Outbox {
                session_id: msg.session_id.clone(),
                seq: 0,
                writer,
            };
            match found {
                Some(snap) => out.send(WireMessage::snapshot(&snap)).await?,
                None => out.send(WireMessage::error("unknown session")).await?,
            }
            return Ok(());
        }
    }

    let session_id = uuid::Uuid::new_v4().to_string();
    let (dialogue, greeting) = open(Arc::clone(&config.library), config.engine.clone());
    let log = match &config.sessions_dir {
        Some(dir) => Some(SessionLog::create(dir, &session_id, &config.library_ref, &config.engine)?),
        None => None,
    };
    let mut live = Live {
        dialogue,
        out: Outbox {
            session_id,
            seq: 0,
            writer,
        },
        log,
        registry,
        started: Instant::now(),
    };
    let snap = live.dialogue.snapshot();
    live.out.send(WireMessage::snapshot(&snap)).await?;
    if let Some(g) = greeting {
        live.out.action(&g).await?;
    }
    live.publish()?;

    let idle = Duration::from_millis(config.engine.timeout_ms.max(1));
    let mut flow = if is_bare_open(&first) {
        Flow::Continue
    } else {
        live.handle(&first).await?
    };
    let reason = loop {
        if let Flow::Stop(reason) = flow {
            break reason;
        }
        flow = match tokio::time::timeout(idle, lines.next_line()).await {
            Err(_) => live.timeout().await?,
            Ok(Ok(Some(line))) if line.trim().is_empty() => Flow::Continue,
            Ok(Ok(Some(line))) => live.handle(&line).await?,
            Ok(Ok(None)) | Ok(Err(_)) => break "client closed",
        };
    };

    let transcript = live.dialogue.transcript().clone();
    if let Some(log) = live.log.as_mut() {
        log.end(&transcript, reason)?;
    }
    // The peer may already be gone.
    let _ = live.out.send(WireMessage::end(reason)).await;
    Ok(())
}

/// A snapshot request without a session id only opens a session.
fn is_bare_open(line: &str) -> bool {
    serde_json::from_str::<WireMessage>(line).is_ok_and(|m| m.kind == MessageType::StateSnapshot)
}
