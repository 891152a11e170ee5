use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use meshkit::{load_library, EngineConfig, MeshEvent, Session, Utterance};
use meshkit_cli::service::{serve, ServiceConfig};
use meshkit_cli::store::{SessionRecord, SessionStatus};
use meshkit_cli::wire::{MessageType, WireMessage};
use serde_json::json;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;

const WALDORF: [&str; 5] = [
    "I want to book a flight",
    "I want to fly to London next Tuesday",
    "the Waldorf Hotel",
    "three nights please",
    "it is ab1234567",
];

fn library_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/libraries/communicator.json")
}

async fn start(engine: EngineConfig, sessions_dir: Option<PathBuf>) -> SocketAddr {
    let config = Arc::new(ServiceConfig {
        library: Arc::new(load_library(library_path()).unwrap()),
        library_ref: "communicator.json".into(),
        engine,
        sessions_dir,
    });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, config));
    addr
}

struct Client {
    lines: Lines<BufReader<OwnedReadHalf>>,
    writer: OwnedWriteHalf,
    seen: Vec<WireMessage>,
}

impl Client {
    async fn connect(addr: SocketAddr) -> Self {
        let (r, w) = TcpStream::connect(addr).await.unwrap().into_split();
        Client {
            lines: BufReader::new(r).lines(),
            writer: w,
            seen: Vec::new(),
        }
    }

    async fn send(&mut self, value: serde_json::Value) {
        let mut line = value.to_string();
        line.push('\n');
        self.writer.write_all(line.as_bytes()).await.unwrap();
    }

    async fn recv(&mut self) -> Option<WireMessage> {
        let line = tokio::time::timeout(Duration::from_secs(5), self.lines.next_line())
            .await
            .expect("server answers within 5 s")
            .unwrap()?;
        let msg: WireMessage = serde_json::from_str(&line).unwrap();
        self.seen.push(msg.clone());
        Some(msg)
    }

    async fn recv_until(&mut self, kind: MessageType) -> Vec<WireMessage> {
        let mut out = Vec::new();
        loop {
            let msg = self.recv().await.expect("stream open");
            let done = msg.kind == kind;
            out.push(msg);
            if done {
                return out;
            }
        }
    }

    async fn say(&mut self, text: &str) -> Vec<WireMessage> {
        self.send(json!({"type": "user_utterance", "payload": {"text": text}})).await;
        self.recv_until(MessageType::SystemUtterance).await
    }

    fn session_id(&self) -> &str {
        &self.seen[0].session_id
    }

    fn events(&self) -> Vec<MeshEvent> {
        self.seen.iter().filter_map(WireMessage::as_event).collect()
    }

    fn assert_sequenced(&self) {
        for (i, m) in self.seen.iter().enumerate() {
            assert_eq!(m.seq, i as u64 + 1, "gap or repeat at {m:?}");
            assert_eq!(m.session_id, self.session_id());
        }
    }
}

/// The engine run in process on the same turns.
fn local_events(turns: &[&str]) -> Vec<MeshEvent> {
    let lib = Arc::new(load_library(library_path()).unwrap());
    let (mut s, _) = Session::start(lib, EngineConfig::default());
    turns
        .iter()
        .enumerate()
        .flat_map(|(i, t)| s.handle_user_turn(&Utterance::user(*t, i as u64 * 10)).unwrap().events)
        .collect()
}

#[tokio::test]
async fn stream_matches_the_engine() {
    let addr = start(EngineConfig::default(), None).await;
    let mut c = Client::connect(addr).await;
    let first = WALDORF[0];
    c.send(json!({"type": "user_utterance", "payload": {"text": first}})).await;
    let opening = c.recv_until(MessageType::SystemUtterance).await;
    assert_eq!(opening[0].kind, MessageType::StateSnapshot);
    assert!(!opening[0].session_id.is_empty());
    assert_eq!(opening[1].kind, MessageType::UserUtterance);
    assert_eq!(opening[1].text(), Some(first));
    for t in &WALDORF[1..] {
        let reply = c.say(t).await;
        assert_eq!(reply[0].kind, MessageType::UserUtterance);
        assert!(reply[1..reply.len() - 1].iter().all(|m| m.kind == MessageType::Event));
    }
    assert_eq!(c.events(), local_events(&WALDORF));
    let hotel = c
        .seen
        .iter()
        .position(|m| m.as_event().is_some_and(|e| e.behaviour_id.as_deref() == Some("book_hotel")))
        .unwrap();
    let reply = c.seen[hotel..].iter().find(|m| m.kind == MessageType::SystemUtterance).unwrap();
    assert!(reply.text().unwrap().starts_with("Oh, you want to book a hotel"));
    assert_eq!(reply.payload["behaviour_id"], "book_hotel");
    c.send(json!({"type": "end"})).await;
    let end = c.recv_until(MessageType::End).await;
    assert_eq!(end.last().unwrap().payload["reason"], "client ended");
    c.assert_sequenced();
}

#[tokio::test]
async fn interleaved_sessions_stay_apart() {
    let addr = start(EngineConfig::default(), None).await;
    let mut a = Client::connect(addr).await;
    let mut b = Client::connect(addr).await;
    let cheese = ["I need to book a flight", "cheese burger"];
    for (i, t) in WALDORF.iter().enumerate() {
        a.say(t).await;
        if let Some(t) = cheese.get(i) {
            b.say(t).await;
        }
    }
    assert_ne!(a.session_id(), b.session_id());
    a.assert_sequenced();
    b.assert_sequenced();
    assert_eq!(a.events(), local_events(&WALDORF));
    assert_eq!(b.events(), local_events(&cheese));
}

#[tokio::test]
async fn snapshot_endpoint_reports_a_live_session() {
    let addr = start(EngineConfig::default(), None).await;
    let mut a = Client::connect(addr).await;
    a.say("I want to book a flight").await;
    a.say("the Waldorf Hotel").await;

    let mut probe = Client::connect(addr).await;
    probe
        .send(json!({"type": "state_snapshot", "session_id": a.session_id()}))
        .await;
    let snap = probe.recv().await.unwrap().as_snapshot().unwrap();
    let stack: Vec<&str> = snap.focus_stack.iter().map(|v| v.behaviour_id.as_str()).collect();
    assert_eq!(stack, ["book_flight", "book_hotel"]);
    assert_eq!(probe.recv().await, None);

    let mut stranger = Client::connect(addr).await;
    stranger
        .send(json!({"type": "state_snapshot", "session_id": "no-such-session"}))
        .await;
    assert_eq!(stranger.recv().await.unwrap().kind, MessageType::Error);

    // Asking inside the session answers without touching the engine.
    a.send(json!({"type": "state_snapshot"})).await;
    let inline = a.recv().await.unwrap().as_snapshot().unwrap();
    assert_eq!(inline, snap);
}

#[tokio::test]
async fn bare_snapshot_only_opens_a_session() {
    let addr = start(EngineConfig::default(), None).await;
    let mut c = Client::connect(addr).await;
    c.send(json!({"type": "state_snapshot"})).await;
    let snap = c.recv().await.unwrap();
    assert_eq!(snap.as_snapshot().unwrap().focus_stack.len(), 0);
    c.say("I want to book a flight").await;
    c.assert_sequenced();
    assert_eq!(c.seen.iter().filter(|m| m.kind == MessageType::StateSnapshot).count(), 1);
}

#[tokio::test]
async fn transcripts_persist_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(EngineConfig::default(), Some(dir.path().to_path_buf())).await;
    let mut c = Client::connect(addr).await;
    for t in WALDORF {
        c.say(t).await;
    }
    c.send(json!({"type": "end"})).await;
    c.recv_until(MessageType::End).await;
    let id = c.session_id().to_string();
    let path = dir.path().join(format!("{id}.jsonl"));
    // The server finishes the file before it sends the end message.
    let record = SessionRecord::load(&path).unwrap();
    assert_eq!(record.session_id, id);
    assert_eq!(record.status, SessionStatus::Ended);
    assert_eq!(record.end_reason.as_deref(), Some("client ended"));
    assert_eq!(record.library_ref, "communicator.json");
    let texts: Vec<&str> = record.transcript.entries().iter().map(|e| e.text.as_str()).collect();
    let streamed: Vec<&str> = c
        .seen
        .iter()
        .filter(|m| matches!(m.kind, MessageType::UserUtterance | MessageType::SystemUtterance))
        .filter_map(WireMessage::text)
        .collect();
    assert_eq!(texts, streamed);
    let events: Vec<MeshEvent> = record.transcript.events().cloned().collect();
    assert_eq!(events, c.events());
}

#[tokio::test]
async fn disconnect_ends_the_persisted_session() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(EngineConfig::default(), Some(dir.path().to_path_buf())).await;
    let mut c = Client::connect(addr).await;
    c.say("I want to book a flight").await;
    let id = c.session_id().to_string();
    drop(c);
    let path = dir.path().join(format!("{id}.jsonl"));
    let mut record = SessionRecord::load(&path).unwrap();
    for _ in 0..50 {
        if record.status == SessionStatus::Ended {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
        record = SessionRecord::load(&path).unwrap();
    }
    assert_eq!(record.end_reason.as_deref(), Some("client closed"));
    assert_eq!(record.transcript.len(), 2);
}

#[tokio::test]
async fn silence_triggers_a_prompt() {
    let engine = EngineConfig {
        timeout_ms: 150,
        ..EngineConfig::default()
    };
    let addr = start(engine, None).await;
    let mut c = Client::connect(addr).await;
    c.say("I want to book a flight").await;
    let prompt = c.recv_until(MessageType::SystemUtterance).await;
    let event = prompt[0].as_event().unwrap();
    assert_eq!(event.kind, meshkit::EventKind::TimeoutPrompt);
    assert_eq!(event.behaviour_id.as_deref(), Some("book_flight"));
    assert!(!prompt.last().unwrap().text().unwrap().is_empty());
}

#[tokio::test]
async fn disengagement_closes_the_session() {
    let addr = start(EngineConfig::default(), None).await;
    let mut c = Client::connect(addr).await;
    for t in ["cheese burger", "cheese burger", "cheese burger"] {
        c.say(t).await;
    }
    let end = c.recv().await.unwrap();
    assert_eq!(end.kind, MessageType::End);
    assert_eq!(end.payload["reason"], "disengaged");
    assert_eq!(c.recv().await, None);
    c.assert_sequenced();
}

#[tokio::test]
async fn bad_lines_get_errors_and_the_session_continues() {
    let addr = start(EngineConfig::default(), None).await;
    let mut c = Client::connect(addr).await;
    c.say("I want to book a flight").await;
    c.writer.write_all(b"this is not json\n").await.unwrap();
    assert_eq!(c.recv().await.unwrap().kind, MessageType::Error);
    c.send(json!({"type": "user_utterance", "payload": {}})).await;
    assert_eq!(c.recv().await.unwrap().kind, MessageType::Error);
    c.send(json!({"type": "event", "payload": {"kind": "completion"}})).await;
    assert_eq!(c.recv().await.unwrap().kind, MessageType::Error);
    let reply = c.say("the Waldorf Hotel").await;
    assert!(reply.iter().any(|m| m.as_event().is_some_and(|e| e.behaviour_id.as_deref() == Some("book_hotel"))));
    c.assert_sequenced();
}
