use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::{Modality, Mode};
use crate::library::Behaviour;
use crate::matcher::Fill;
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    Active,
    Suspended,
    Completed,
    Abandoned,
}

/// One run of a behaviour: what has been filled and which prompt is next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviourInstance {
    pub behaviour_id: String,
    pub filled: BTreeMap<String, Fill>,
    pub prompt_cursor: BTreeMap<String, usize>,
    pub status: InstanceStatus,
}

impl BehaviourInstance {
    pub fn new(behaviour_id: impl Into<String>) -> Self {
        BehaviourInstance {
            behaviour_id: behaviour_id.into(),
            filled: BTreeMap::new(),
            prompt_cursor: BTreeMap::new(),
            status: InstanceStatus::Active,
        }
    }

    pub fn filled_names(&self) -> BTreeSet<String> {
        self.filled.keys().cloned().collect()
    }

    /// Record fills; slots already filled keep their first value.
    pub fn apply(&mut self, fills: impl IntoIterator<Item = Fill>) {
        for fill in fills {
            self.filled.entry(fill.slot.clone()).or_insert(fill);
        }
    }

    pub fn missing_required(&self, behaviour: &Behaviour) -> Vec<String> {
        behaviour
            .required_slots()
            .filter(|s| !self.filled.contains_key(&s.name))
            .map(|s| s.name.clone())
            .collect()
    }

    /// Done by itself: has required slots and all of them are filled.
    pub fn is_complete(&self, behaviour: &Behaviour) -> bool {
        !behaviour.is_open_ended() && self.missing_required(behaviour).is_empty()
    }

    /// Next prompt to speak, advancing (and cycling) that slot's cursor.
    /// Unfilled required slots come first, then optional ones.
    pub fn next_prompt(&mut self, behaviour: &Behaviour) -> Option<String> {
        let unfilled = |required: bool| {
            behaviour
                .slots
                .iter()
                .filter(move |s| s.required == required)
                .filter(|s| !self.filled.contains_key(&s.name) && !s.prompts.is_empty())
        };
        let slot = unfilled(true).chain(unfilled(false)).next()?;
        let cursor = self.prompt_cursor.entry(slot.name.clone()).or_insert(0);
        let prompt = slot.prompts[*cursor % slot.prompts.len()].clone();
        *cursor = (*cursor + 1) % slot.prompts.len();
        Some(prompt)
    }

    pub fn view(&self) -> InstanceView {
        InstanceView {
            behaviour_id: self.behaviour_id.clone(),
            filled: self
                .filled
                .iter()
                .map(|(k, f)| (k.clone(), f.value.clone()))
                .collect(),
            status: self.status,
        }
    }
}

/// Commitment state of a sequential session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversationState {
    /// Last element is the committed behaviour.
    pub focus_stack: Vec<BehaviourInstance>,
    pub completed: Vec<BehaviourInstance>,
    /// Triggered behaviours waiting on prerequisites, oldest first.
    pub queued: Vec<String>,
    pub sanction_level: u32,
    pub history: Transcript,
    pub mode: Mode,
    pub modality: Modality,
    pub ended: bool,
}

impl ConversationState {
    pub fn new(mode: Mode, modality: Modality) -> Self {
        ConversationState {
            focus_stack: Vec::new(),
            completed: Vec::new(),
            queued: Vec::new(),
            sanction_level: 0,
            history: Transcript::new(),
            mode,
            modality,
            ended: false,
        }
    }

    pub fn focus(&self) -> Option<&BehaviourInstance> {
        self.focus_stack.last()
    }

    pub fn completed_ids(&self) -> BTreeSet<&str> {
        self.completed.iter().map(|i| i.behaviour_id.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceView {
    pub behaviour_id: String,
    pub filled: BTreeMap<String, String>,
    pub status: InstanceStatus,
}

/// Inspector view of a session, bottom of the stack first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub focus_stack: Vec<InstanceView>,
    pub sanction_level: u32,
    pub mode: Mode,
    pub modality: Modality,
}
