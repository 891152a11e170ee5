//! Single-focus arbitration.
//!
//! Each user turn is checked against the committed behaviour first. If it
//! meshes the turn goes by unnoticed; if not, the library is searched for a
//! behaviour it does mesh with and the engine switches to it, suspending the
//! old one; if nothing meshes anywhere, the sanction ladder moves up a rung.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::config::{EngineConfig, Mode};
use super::events::{EventKind, ReplyBuilder, SystemAction};
use super::sanction::{Rung, SanctionPolicy};
use super::speech::{Speech, FLOOR_OFFER, OPENER};
use super::state::{BehaviourInstance, ConversationState, InstanceStatus, StateSnapshot};
use super::{can_trigger, first_unmet_prerequisite, Dialogue, EngineError};
use crate::library::{Behaviour, PlanLibrary};
use crate::matcher::{select_candidate, MatchResult, Matcher, Utterance};
use crate::transcript::{Speaker, Transcript, TranscriptEntry};

pub struct Session {
    library: Arc<PlanLibrary>,
    config: EngineConfig,
    policy: SanctionPolicy,
    state: ConversationState,
}

/// Start a session; the returned action carries the greeting, if configured.
pub fn start_session(library: Arc<PlanLibrary>, config: EngineConfig) -> (Session, Option<SystemAction>) {
    Session::start(library, config)
}

impl Session {
    pub fn start(library: Arc<PlanLibrary>, config: EngineConfig) -> (Self, Option<SystemAction>) {
        let mut session = Session {
            policy: SanctionPolicy::from_config(&config),
            state: ConversationState::new(config.mode, config.modality),
            library,
            config,
        };
        let greeting = session.config.greeting.clone().map(|text| {
            session.state.history.push(TranscriptEntry {
                speaker: Speaker::System,
                text: text.clone(),
                timestamp: 0,
                events: vec![],
            });
            SystemAction {
                utterance: text,
                ..Default::default()
            }
        });
        (session, greeting)
    }

    pub fn state(&self) -> &ConversationState {
        &self.state
    }

    pub fn library(&self) -> &PlanLibrary {
        &self.library
    }

    pub fn policy(&self) -> &SanctionPolicy {
        &self.policy
    }

    fn matcher(&self) -> Matcher<'_> {
        Matcher::new(&self.library, self.config.reference_clock)
    }

    fn speech(&self) -> Speech {
        Speech {
            mode: self.config.mode,
        }
    }

    fn behaviour(&self, id: &str) -> &Behaviour {
        self.library
            .get(id)
            .expect("instances only reference library behaviours")
    }

    fn focus_id(&self) -> Option<String> {
        self.state.focus().map(|i| i.behaviour_id.clone())
    }

    fn live(&self) -> Result<(), EngineError> {
        if self.state.ended {
            Err(EngineError::SessionEnded)
        } else {
            Ok(())
        }
    }

    /// All of the behaviour's prerequisites have completed.
    pub fn can_trigger(&self, behaviour: &Behaviour) -> bool {
        can_trigger(&self.state.completed_ids(), behaviour)
    }

    pub fn handle_user_turn(&mut self, utterance: &Utterance) -> Result<SystemAction, EngineError> {
        self.live()?;
        if utterance.speaker != Speaker::User {
            return Err(EngineError::NotUserTurn);
        }
        self.state.history.push(TranscriptEntry {
            speaker: Speaker::User,
            text: utterance.text.clone(),
            timestamp: utterance.timestamp,
            events: vec![],
        });

        let mut reply = ReplyBuilder::default();
        if let Some(result) = self.focus_mesh(utterance) {
            let id = result.behaviour_id.clone();
            self.state.sanction_level = 0;
            reply.event(EventKind::Unnoticed, Some(&id), "");
            let top = self.state.focus_stack.last_mut().unwrap();
            top.apply(result.fills);
            self.progress(&mut reply);
        } else {
            let exclude: BTreeSet<String> = self.focus_id().into_iter().collect();
            let found = self.matcher().scan_library(utterance, &exclude);
            match select_candidate(&found) {
                Some(chosen) => {
                    let chosen = chosen.clone();
                    self.state.sanction_level = 0;
                    self.account_for(chosen, utterance, &mut reply);
                }
                None => self.sanction(&mut reply),
            }
        }
        Ok(self.finish(reply, utterance.timestamp))
    }

    fn focus_mesh(&self, utterance: &Utterance) -> Option<MatchResult> {
        let top = self.state.focus()?;
        let behaviour = self.behaviour(&top.behaviour_id);
        let result = self
            .matcher()
            .match_utterance(utterance, behaviour, &top.filled_names());
        result.meshes().then_some(result)
    }

    fn account_for(&mut self, chosen: MatchResult, utterance: &Utterance, reply: &mut ReplyBuilder) {
        let library = Arc::clone(&self.library);
        let wanted = library.get(&chosen.behaviour_id).unwrap();
        reply.say(self.speech().acknowledge(wanted));

        if self.can_trigger(wanted) {
            self.state.queued.retain(|q| q != &wanted.id);
            let resumed = self.bring_to_top(&wanted.id);
            let top = self.state.focus_stack.last_mut().unwrap();
            if resumed {
                let again = Matcher::new(&library, self.config.reference_clock).match_utterance(
                    utterance,
                    wanted,
                    &top.filled_names(),
                );
                top.apply(again.fills);
                reply.event(EventKind::AccountedForSwitch, Some(&wanted.id), "resumed");
            } else {
                top.apply(chosen.fills);
                reply.event(EventKind::AccountedForSwitch, Some(&wanted.id), "");
            }
        } else {
            let completed = self.state.completed_ids();
            let prerequisite = first_unmet_prerequisite(&library, &completed, wanted)
                .expect("an untriggerable behaviour has an unmet prerequisite");
            if !self.state.queued.contains(&wanted.id) {
                self.state.queued.push(wanted.id.clone());
                reply.event(
                    EventKind::TriggerQueued,
                    Some(&wanted.id),
                    format!("waiting for {}", prerequisite.id),
                );
            }
            self.bring_to_top(&prerequisite.id);
            reply.event(
                EventKind::AccountedForSwitch,
                Some(&prerequisite.id),
                format!("prerequisite of {}", wanted.id),
            );
        }
        self.progress(reply);
    }

    /// Make `id` the focus, suspending the current one. Returns true when an
    /// existing instance was resumed rather than a new one started.
    fn bring_to_top(&mut self, id: &str) -> bool {
        let stack = &mut self.state.focus_stack;
        if stack.last().is_some_and(|t| t.behaviour_id == id) {
            return true;
        }
        if let Some(top) = stack.last_mut() {
            top.status = InstanceStatus::Suspended;
        }
        match stack.iter().position(|i| i.behaviour_id == id) {
            Some(pos) => {
                let mut inst = stack.remove(pos);
                inst.status = InstanceStatus::Active;
                stack.push(inst);
                true
            }
            None => {
                stack.push(BehaviourInstance::new(id));
                false
            }
        }
    }

    /// After the focus gained something: complete it, or ask for more.
    fn progress(&mut self, reply: &mut ReplyBuilder) {
        let library = Arc::clone(&self.library);
        let top = self.state.focus_stack.last_mut().unwrap();
        let behaviour = library.get(&top.behaviour_id).unwrap();
        if top.is_complete(behaviour) {
            self.complete_top(reply);
        } else if let Some(prompt) = top.next_prompt(behaviour) {
            reply.say(prompt);
        }
    }

    fn complete_top(&mut self, reply: &mut ReplyBuilder) {
        let library = Arc::clone(&self.library);
        let speech = self.speech();
        let mut done = self.state.focus_stack.pop().expect("completing requires a focus");
        done.status = InstanceStatus::Completed;
        let behaviour = library.get(&done.behaviour_id).unwrap();
        reply.event(
            EventKind::Completion,
            Some(&behaviour.id),
            behaviour.completion_effect.clone(),
        );
        reply.effects.push(behaviour.completion_effect.clone());
        reply.say(speech.completed(behaviour));
        self.state.completed.push(done);

        let completed = self.state.completed_ids();
        let on_stack = |id: &str| self.state.focus_stack.iter().any(|i| i.behaviour_id == id);
        let released = self
            .state
            .queued
            .iter()
            .position(|q| !on_stack(q) && can_trigger(&completed, library.get(q).unwrap()));

        if let Some(pos) = released {
            let id = self.state.queued.remove(pos);
            if let Some(top) = self.state.focus_stack.last_mut() {
                top.status = InstanceStatus::Suspended;
            }
            let mut inst = BehaviourInstance::new(&id);
            reply.event(EventKind::QueueReleased, Some(&id), "");
            if let Some(p) = inst.next_prompt(library.get(&id).unwrap()) {
                reply.say(p);
            }
            self.state.focus_stack.push(inst);
        } else if let Some(top) = self.state.focus_stack.last_mut() {
            top.status = InstanceStatus::Active;
            reply.event(EventKind::Resumed, Some(&top.behaviour_id), "");
            if let Some(p) = top.next_prompt(library.get(&top.behaviour_id).unwrap()) {
                reply.say(p);
            }
        } else {
            reply.say(FLOOR_OFFER);
        }
    }

    fn sanction(&mut self, reply: &mut ReplyBuilder) {
        self.state.sanction_level += 1;
        let level = self.state.sanction_level;
        let focus = self.focus_id();
        reply.event(EventKind::NoAccount, focus.as_deref(), "");
        reply.event(EventKind::SanctionStep, None, format!("level {level}"));
        let rung = self.policy.rung(level).clone();
        reply.say(self.policy.text(&rung));
        if rung == Rung::Disengage {
            reply.event(EventKind::Disengage, None, "");
            self.state.ended = true;
        }
    }

    /// The system takes the initiative after silence.
    pub fn handle_timeout(&mut self, now: u64) -> Result<SystemAction, EngineError> {
        self.live()?;
        let library = Arc::clone(&self.library);
        let mut reply = ReplyBuilder::default();
        let focus = self.focus_id();
        reply.event(EventKind::TimeoutPrompt, focus.as_deref(), "");
        let prompt = self
            .state
            .focus_stack
            .last_mut()
            .and_then(|top| top.next_prompt(library.get(&top.behaviour_id).unwrap()));
        reply.say(prompt.unwrap_or_else(|| OPENER.to_string()));
        Ok(self.finish(reply, now))
    }

    /// Finish the focused behaviour explicitly.
    pub fn complete_focus(&mut self, now: u64) -> Result<SystemAction, EngineError> {
        self.live()?;
        let top = self.state.focus().ok_or(EngineError::NoFocus)?;
        let missing = top.missing_required(self.behaviour(&top.behaviour_id));
        if !missing.is_empty() {
            return Err(EngineError::PreconditionFailed {
                behaviour_id: top.behaviour_id.clone(),
                missing,
            });
        }
        let mut reply = ReplyBuilder::default();
        self.complete_top(&mut reply);
        Ok(self.finish(reply, now))
    }

    fn finish(&mut self, reply: ReplyBuilder, now: u64) -> SystemAction {
        let action = reply.finish(self.focus_id());
        self.state.history.push(TranscriptEntry {
            speaker: Speaker::System,
            text: action.utterance.clone(),
            timestamp: now,
            events: action.events.clone(),
        });
        action
    }

    /// Human-readable account of what the system is committed to. Not
    /// consulted by arbitration.
    pub fn explain(&self) -> String {
        let speech = self.speech();
        let name = |id: &str| speech.name(self.behaviour(id)).to_string();
        let mut stack = self.state.focus_stack.iter().rev();
        let Some(top) = stack.next() else {
            return "I am not doing anything yet".to_string();
        };
        let mut out = format!("I am trying to: {}", name(&top.behaviour_id));
        let rest: Vec<String> = stack.map(|i| name(&i.behaviour_id)).collect();
        if !rest.is_empty() {
            out.push_str(&format!(" (then: {})", rest.join(", ")));
        }
        if !self.state.queued.is_empty() {
            let queued: Vec<String> = self.state.queued.iter().map(|q| name(q)).collect();
            out.push_str(&format!("; waiting to: {}", queued.join(", ")));
        }
        out
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            focus_stack: self.state.focus_stack.iter().map(|i| i.view()).collect(),
            sanction_level: self.state.sanction_level,
            mode: self.config.mode,
            modality: self.config.modality,
        }
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }
}

impl Dialogue for Session {
    fn handle_user_turn(&mut self, utterance: &Utterance) -> Result<SystemAction, EngineError> {
        Session::handle_user_turn(self, utterance)
    }

    fn handle_timeout(&mut self, now: u64) -> Result<SystemAction, EngineError> {
        Session::handle_timeout(self, now)
    }

    fn explain(&self) -> String {
        Session::explain(self)
    }

    fn snapshot(&self) -> StateSnapshot {
        Session::snapshot(self)
    }

    fn transcript(&self) -> &Transcript {
        &self.state.history
    }

    fn sanction_level(&self) -> u32 {
        self.state.sanction_level
    }

    fn is_ended(&self) -> bool {
        self.state.ended
    }

    fn config(&self) -> &EngineConfig {
        &self.config
    }
}
