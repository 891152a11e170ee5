use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The utterance meshed with the committed behaviour.
    Unnoticed,
    /// It did not, but another behaviour in the library could use it.
    AccountedForSwitch,
    /// Nothing could use it.
    NoAccount,
    TimeoutPrompt,
    Completion,
    SanctionStep,
    Disengage,
    /// A triggered behaviour is waiting on its prerequisites.
    TriggerQueued,
    /// A queued behaviour became eligible and was started.
    QueueReleased,
    /// A suspended behaviour became the focus again.
    Resumed,
    /// Two trajectories competed for a resource; the later one was refused.
    Bump,
    /// A trajectory got no uptake within the patience window.
    Abandoned,
}

impl EventKind {
    /// Kinds that classify a user turn; every turn gets exactly one.
    pub fn is_turn_classification(self) -> bool {
        matches!(
            self,
            EventKind::Unnoticed | EventKind::AccountedForSwitch | EventKind::NoAccount
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Unnoticed => "unnoticed",
            EventKind::AccountedForSwitch => "accounted_for_switch",
            EventKind::NoAccount => "no_account",
            EventKind::TimeoutPrompt => "timeout_prompt",
            EventKind::Completion => "completion",
            EventKind::SanctionStep => "sanction_step",
            EventKind::Disengage => "disengage",
            EventKind::TriggerQueued => "trigger_queued",
            EventKind::QueueReleased => "queue_released",
            EventKind::Resumed => "resumed",
            EventKind::Bump => "bump",
            EventKind::Abandoned => "abandoned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshEvent {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behaviour_id: Option<String>,
    #[serde(default)]
    pub detail: String,
}

impl MeshEvent {
    pub fn new(kind: EventKind, behaviour_id: Option<&str>, detail: impl Into<String>) -> Self {
        MeshEvent {
            kind,
            behaviour_id: behaviour_id.map(str::to_string),
            detail: detail.into(),
        }
    }

    /// The part of an event that arbitration decides: kind and behaviour.
    pub fn key(&self) -> (EventKind, Option<&str>) {
        (self.kind, self.behaviour_id.as_deref())
    }
}

/// What the system does in response to a turn or a timeout.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemAction {
    pub utterance: String,
    pub events: Vec<MeshEvent>,
    /// Completion-effect tokens emitted this turn.
    pub effects: Vec<String>,
    /// The behaviour in focus after the action, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<String>,
}

#[derive(Debug, Default)]
pub(crate) struct ReplyBuilder {
    parts: Vec<String>,
    pub events: Vec<MeshEvent>,
    pub effects: Vec<String>,
}

impl ReplyBuilder {
    pub fn say(&mut self, text: impl Into<String>) {
        let text = text.into();
        if !text.is_empty() {
            self.parts.push(text);
        }
    }

    pub fn event(&mut self, kind: EventKind, behaviour_id: Option<&str>, detail: impl Into<String>) {
        self.events.push(MeshEvent::new(kind, behaviour_id, detail));
    }

    pub fn finish(self, focus: Option<String>) -> SystemAction {
        SystemAction {
            utterance: self.parts.join(" "),
            events: self.events,
            effects: self.effects,
            focus,
        }
    }
}
