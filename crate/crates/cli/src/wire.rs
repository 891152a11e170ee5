//! Newline-delimited JSON messages exchanged with service clients.

use meshkit::{MeshEvent, StateSnapshot};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    UserUtterance,
    SystemUtterance,
    Event,
    StateSnapshot,
    Error,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(default)]
    pub session_id: String,
    #[serde(default)]
    pub seq: u64,
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default)]
    pub payload: Value,
}

impl WireMessage {
    pub fn new(kind: MessageType, payload: Value) -> Self {
        WireMessage {
            session_id: String::new(),
            seq: 0,
            kind,
            payload,
        }
    }

    pub fn user_utterance(text: &str) -> Self {
        Self::new(MessageType::UserUtterance, json!({ "text": text }))
    }

    pub fn system_utterance(text: &str, behaviour_id: Option<&str>) -> Self {
        let mut payload = json!({ "text": text });
        if let Some(id) = behaviour_id {
            payload["behaviour_id"] = json!(id);
        }
        Self::new(MessageType::SystemUtterance, payload)
    }

    pub fn event(event: &MeshEvent) -> Self {
        Self::new(MessageType::Event, serde_json::to_value(event).expect("events serialize"))
    }

    pub fn snapshot(snapshot: &StateSnapshot) -> Self {
        Self::new(
            MessageType::StateSnapshot,
            serde_json::to_value(snapshot).expect("snapshots serialize"),
        )
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self::new(MessageType::Error, json!({ "message": message.into() }))
    }

    pub fn end(reason: &str) -> Self {
        Self::new(MessageType::End, json!({ "reason": reason }))
    }

    /// `payload.text`, for user and system utterances.
    pub fn text(&self) -> Option<&str> {
        self.payload.get("text").and_then(Value::as_str)
    }

    pub fn as_event(&self) -> Option<MeshEvent> {
        (self.kind == MessageType::Event)
            .then(|| serde_json::from_value(self.payload.clone()).ok())
            .flatten()
    }

    pub fn as_snapshot(&self) -> Option<StateSnapshot> {
        (self.kind == MessageType::StateSnapshot)
            .then(|| serde_json::from_value(self.payload.clone()).ok())
            .flatten()
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("wire messages serialize");
        line.push('\n');
        line
    }
}
