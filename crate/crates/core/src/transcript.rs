use serde::{Deserialize, Serialize};

use crate::engine::MeshEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
    pub timestamp: u64,
    #[serde(default)]
    pub events: Vec<MeshEvent>,
}

/// Ordered log of a dialogue. Timestamps never decrease.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append an entry; a timestamp earlier than the last one is raised to it.
    pub fn push(&mut self, mut entry: TranscriptEntry) {
        if let Some(last) = self.entries.last() {
            entry.timestamp = entry.timestamp.max(last.timestamp);
        }
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_timestamp(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.timestamp)
    }

    pub fn events(&self) -> impl Iterator<Item = &MeshEvent> {
        self.entries.iter().flat_map(|e| e.events.iter())
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut t = Transcript::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            t.entries.push(serde_json::from_str(line)?);
        }
        Ok(t)
    }
}
