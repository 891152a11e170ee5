//! Several behaviours live at once, chat-room style. Each move in a turn is
//! routed to the trajectory it meshes with; behaviours that declare the same
//! resource cannot run side by side.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::events::ReplyBuilder;
use crate::engine::speech::{Speech, FLOOR_OFFER, OPENER};
use crate::engine::{
    can_trigger, first_unmet_prerequisite, BehaviourInstance, Dialogue, EngineConfig, EngineError, EventKind,
    InstanceStatus, MeshEvent, Modality, Mode, Rung, SanctionPolicy, StateSnapshot, SystemAction,
};
use crate::library::{Behaviour, PlanLibrary};
use crate::matcher::{select_candidate, Matcher, Utterance};
use crate::transcript::{Speaker, Transcript, TranscriptEntry};

pub const NO_UPTAKE: &str = "no uptake";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance: BehaviourInstance,
    /// When this trajectory last meshed with something the user said.
    pub last_mesh: u64,
}

impl Trajectory {
    fn id(&self) -> &str {
        &self.instance.behaviour_id
    }
}

/// Two behaviours competing for the same resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpEvent {
    pub a: String,
    pub b: String,
    pub resource: String,
}

/// First of `a`'s resources that `b` also declares. Identical ids never bump.
pub fn detect_bump(a: &Behaviour, b: &Behaviour) -> Option<BumpEvent> {
    if a.id == b.id {
        return None;
    }
    a.resources
        .iter()
        .find(|r| b.resources.contains(r))
        .map(|r| BumpEvent {
            a: a.id.clone(),
            b: b.id.clone(),
            resource: r.clone(),
        })
}

/// Split a turn into moves at sentence-final punctuation and line breaks.
pub fn segment(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?', '\n', '\r'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// What routing needs besides the set itself.
#[derive(Debug, Clone, Copy)]
pub struct RouteContext<'a> {
    pub library: &'a PlanLibrary,
    pub reference: DateTime<Utc>,
    pub mode: Mode,
}

/// Outcome of routing one turn.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Routing {
    pub events: Vec<MeshEvent>,
    pub utterance: String,
    pub effects: Vec<String>,
    /// The turn was classified as something other than no_account.
    pub accounted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySet {
    pub modality: Modality,
    /// Live trajectories in activation order.
    pub active: Vec<Trajectory>,
    /// Trajectories pushed aside by a bump in sequential modality; last is
    /// the most recently suspended.
    pub suspended: Vec<Trajectory>,
    pub abandoned: Vec<(BehaviourInstance, String)>,
    pub completed: Vec<BehaviourInstance>,
    pub queued: Vec<String>,
    focus: Option<String>,
}

impl TrajectorySet {
    pub fn new(modality: Modality) -> Self {
        TrajectorySet {
            modality,
            active: Vec::new(),
            suspended: Vec::new(),
            abandoned: Vec::new(),
            completed: Vec::new(),
            queued: Vec::new(),
            focus: None,
        }
    }

    /// The most recently meshed active trajectory.
    pub fn focus(&self) -> Option<&str> {
        self.focus.as_deref()
    }

    pub fn is_active(&self, id: &str) -> bool {
        self.active.iter().any(|t| t.id() == id)
    }

    fn completed_ids(&self) -> BTreeSet<&str> {
        self.completed.iter().map(|i| i.behaviour_id.as_str()).collect()
    }

    fn index(&self, id: &str) -> Option<usize> {
        self.active.iter().position(|t| t.id() == id)
    }

    fn refocus(&mut self) {
        self.focus = self
            .active
            .iter()
            .rev()
            .max_by_key(|t| t.last_mesh)
            .map(|t| t.id().to_string());
    }

    /// Route a user turn. In parallel modality each move is routed on its
    /// own; in sequential modality the turn is one move.
    pub fn route_utterance(&mut self, utterance: &Utterance, ctx: &RouteContext<'_>) -> Routing {
        let moves = match self.modality {
            Modality::Parallel => segment(&utterance.text),
            Modality::Sequential => vec![utterance.text.as_str()],
        };
        let moves = if moves.is_empty() { vec![""] } else { moves };
        let mut reply = ReplyBuilder::default();
        let mut classes = Vec::new();
        for text in moves {
            let part = Utterance {
                text: text.to_string(),
                ..utterance.clone()
            };
            classes.push(self.route_move(&part, ctx, &mut reply));
        }
        // Each move is classified on its own; the turn is accounted for
        // when any move was.
        let accounted = classes.iter().any(|&i| reply.events[i].kind != EventKind::NoAccount);
        let action = reply.finish(None);
        Routing {
            events: action.events,
            utterance: action.utterance,
            effects: action.effects,
            accounted,
        }
    }

    /// Route one move. Returns the index in `reply.events` of the event
    /// classifying it.
    fn route_move(&mut self, utterance: &Utterance, ctx: &RouteContext<'_>, reply: &mut ReplyBuilder) -> usize {
        let library = ctx.library;
        let matcher = Matcher::new(library, ctx.reference);
        let now = utterance.timestamp;
        let classify = |reply: &mut ReplyBuilder, kind, id: Option<&str>, detail: String| {
            reply.event(kind, id, detail);
            reply.events.len() - 1
        };

        for i in 0..self.active.len() {
            let inst = &self.active[i].instance;
            let behaviour = library.get(&inst.behaviour_id).unwrap();
            let result = matcher.match_utterance(utterance, behaviour, &inst.filled_names());
            if result.meshes() {
                let class = classify(reply, EventKind::Unnoticed, Some(&behaviour.id), String::new());
                let t = &mut self.active[i];
                t.instance.apply(result.fills);
                t.last_mesh = now;
                self.focus = Some(behaviour.id.clone());
                self.progress(&behaviour.id, now, ctx, reply);
                return class;
            }
        }

        let exclude: BTreeSet<String> = self.active.iter().map(|t| t.id().to_string()).collect();
        let found = matcher.scan_library(utterance, &exclude);
        let Some(chosen) = select_candidate(&found) else {
            return classify(reply, EventKind::NoAccount, self.focus.as_deref(), String::new());
        };
        let speech = Speech { mode: ctx.mode };
        let wanted = library.get(&chosen.behaviour_id).unwrap();
        let completed = self.completed_ids();
        let gate = (!can_trigger(&completed, wanted)).then(|| {
            first_unmet_prerequisite(library, &completed, wanted)
                .expect("an untriggerable behaviour has an unmet prerequisite")
        });
        let start = gate.unwrap_or(wanted);

        if let Some(bump) = self.refusal(start, library) {
            let class = classify(reply, EventKind::AccountedForSwitch, Some(&start.id), "refused".into());
            reply.event(
                EventKind::Bump,
                Some(&start.id),
                format!("{} holds {}", bump.a, bump.resource),
            );
            reply.say(speech.negotiate(library.get(&bump.a).unwrap()));
            return class;
        }

        reply.say(speech.acknowledge(wanted));
        let class = match gate {
            None => {
                self.queued.retain(|q| q != &wanted.id);
                if self.activate(&wanted.id, now, library) {
                    let i = self.index(&wanted.id).unwrap();
                    let inst = &mut self.active[i].instance;
                    let again = matcher.match_utterance(utterance, wanted, &inst.filled_names());
                    inst.apply(again.fills);
                    classify(reply, EventKind::AccountedForSwitch, Some(&wanted.id), "resumed".into())
                } else {
                    let i = self.index(&wanted.id).unwrap();
                    self.active[i].instance.apply(chosen.fills.clone());
                    classify(reply, EventKind::AccountedForSwitch, Some(&wanted.id), String::new())
                }
            }
            Some(prerequisite) => {
                if !self.queued.contains(&wanted.id) {
                    self.queued.push(wanted.id.clone());
                    reply.event(
                        EventKind::TriggerQueued,
                        Some(&wanted.id),
                        format!("waiting for {}", prerequisite.id),
                    );
                }
                self.activate(&prerequisite.id, now, library);
                classify(
                    reply,
                    EventKind::AccountedForSwitch,
                    Some(&prerequisite.id),
                    format!("prerequisite of {}", wanted.id),
                )
            }
        };
        self.progress(&start.id, now, ctx, reply);
        class
    }

    /// In parallel modality, the bump that stops `b` from starting.
    fn refusal(&self, b: &Behaviour, library: &PlanLibrary) -> Option<BumpEvent> {
        if self.modality != Modality::Parallel || self.is_active(&b.id) {
            return None;
        }
        self.active
            .iter()
            .find_map(|t| detect_bump(library.get(t.id()).unwrap(), b))
    }

    /// Make `id` live and focused. Whatever it bumps is suspended. Returns
    /// true when an existing instance was picked up again.
    fn activate(&mut self, id: &str, now: u64, library: &PlanLibrary) -> bool {
        self.focus = Some(id.to_string());
        if self.is_active(id) {
            return true;
        }
        let behaviour = library.get(id).unwrap();
        let (bumped, kept): (Vec<Trajectory>, Vec<Trajectory>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|t| detect_bump(library.get(t.id()).unwrap(), behaviour).is_some());
        self.active = kept;
        for mut t in bumped {
            t.instance.status = InstanceStatus::Suspended;
            self.suspended.push(t);
        }
        match self.suspended.iter().position(|t| t.id() == id) {
            Some(pos) => {
                let mut t = self.suspended.remove(pos);
                t.instance.status = InstanceStatus::Active;
                t.last_mesh = now;
                self.active.push(t);
                true
            }
            None => {
                self.active.push(Trajectory {
                    instance: BehaviourInstance::new(id),
                    last_mesh: now,
                });
                false
            }
        }
    }

    fn progress(&mut self, id: &str, now: u64, ctx: &RouteContext<'_>, reply: &mut ReplyBuilder) {
        let behaviour = ctx.library.get(id).unwrap();
        let i = self.index(id).unwrap();
        let inst = &mut self.active[i].instance;
        if inst.is_complete(behaviour) {
            self.complete(i, now, ctx, reply);
        } else if let Some(prompt) = inst.next_prompt(behaviour) {
            reply.say(prompt);
        }
    }

    fn complete(&mut self, i: usize, now: u64, ctx: &RouteContext<'_>, reply: &mut ReplyBuilder) {
        let library = ctx.library;
        let mut done = self.active.remove(i).instance;
        done.status = InstanceStatus::Completed;
        let behaviour = library.get(&done.behaviour_id).unwrap();
        reply.event(
            EventKind::Completion,
            Some(&behaviour.id),
            behaviour.completion_effect.clone(),
        );
        reply.effects.push(behaviour.completion_effect.clone());
        reply.say(Speech { mode: ctx.mode }.completed(behaviour));
        self.completed.push(done);
        self.refocus();

        let completed = self.completed_ids();
        let released = self.queued.iter().position(|q| {
            let b = library.get(q).unwrap();
            !self.is_active(q)
                && !self.suspended.iter().any(|t| t.id() == q)
                && can_trigger(&completed, b)
                && self.refusal(b, library).is_none()
        });

        if let Some(pos) = released {
            let id = self.queued.remove(pos);
            self.activate(&id, now, library);
            reply.event(EventKind::QueueReleased, Some(&id), "");
            self.prompt(&id, library, reply);
        } else if self.active.is_empty() {
            match self.suspended.pop() {
                Some(mut t) => {
                    t.instance.status = InstanceStatus::Active;
                    t.last_mesh = now;
                    let id = t.id().to_string();
                    self.active.push(t);
                    self.focus = Some(id.clone());
                    reply.event(EventKind::Resumed, Some(&id), "");
                    self.prompt(&id, library, reply);
                }
                None => reply.say(FLOOR_OFFER),
            }
        }
    }

    fn prompt(&mut self, id: &str, library: &PlanLibrary, reply: &mut ReplyBuilder) {
        let i = self.index(id).unwrap();
        if let Some(p) = self.active[i].instance.next_prompt(library.get(id).unwrap()) {
            reply.say(p);
        }
    }

    /// Drop active trajectories that have gone `patience_ms` without a mesh.
    pub fn abandon_stale(&mut self, now: u64, patience_ms: u64) -> Vec<MeshEvent> {
        let (stale, live): (Vec<Trajectory>, Vec<Trajectory>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|t| now.saturating_sub(t.last_mesh) >= patience_ms);
        self.active = live;
        let events = stale
            .into_iter()
            .map(|mut t| {
                t.instance.status = InstanceStatus::Abandoned;
                let event = MeshEvent::new(EventKind::Abandoned, Some(t.id()), NO_UPTAKE);
                self.abandoned.push((t.instance, NO_UPTAKE.to_string()));
                event
            })
            .collect::<Vec<_>>();
        if !events.is_empty() {
            self.refocus();
        }
        events
    }

    /// Suspended trajectories first, then the live ones.
    pub fn snapshot(&self, config: &EngineConfig, sanction_level: u32) -> StateSnapshot {
        StateSnapshot {
            focus_stack: self
                .suspended
                .iter()
                .chain(&self.active)
                .map(|t| t.instance.view())
                .collect(),
            sanction_level,
            mode: config.mode,
            modality: self.modality,
        }
    }
}

/// A conversation run on a trajectory set.
pub struct TrajectorySession {
    library: Arc<PlanLibrary>,
    config: EngineConfig,
    policy: SanctionPolicy,
    set: TrajectorySet,
    history: Transcript,
    sanction_level: u32,
    ended: bool,
}

impl TrajectorySession {
    pub fn start(library: Arc<PlanLibrary>, config: EngineConfig) -> (Self, Option<SystemAction>) {
        let mut history = Transcript::new();
        let greeting = config.greeting.clone().map(|text| {
            history.push(TranscriptEntry {
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
        let session = TrajectorySession {
            policy: SanctionPolicy::from_config(&config),
            set: TrajectorySet::new(config.modality),
            library,
            config,
            history,
            sanction_level: 0,
            ended: false,
        };
        (session, greeting)
    }

    pub fn set(&self) -> &TrajectorySet {
        &self.set
    }

    fn live(&self) -> Result<(), EngineError> {
        if self.ended {
            Err(EngineError::SessionEnded)
        } else {
            Ok(())
        }
    }

    fn abandon(&mut self, now: u64) -> Vec<MeshEvent> {
        match self.set.modality {
            Modality::Parallel => self.set.abandon_stale(now, self.config.patience_ms),
            Modality::Sequential => Vec::new(),
        }
    }

    pub fn handle_user_turn(&mut self, utterance: &Utterance) -> Result<SystemAction, EngineError> {
        self.live()?;
        if utterance.speaker != Speaker::User {
            return Err(EngineError::NotUserTurn);
        }
        self.history.push(TranscriptEntry {
            speaker: Speaker::User,
            text: utterance.text.clone(),
            timestamp: utterance.timestamp,
            events: vec![],
        });
        let mut reply = ReplyBuilder::default();
        reply.events = self.abandon(utterance.timestamp);
        let ctx = RouteContext {
            library: &self.library,
            reference: self.config.reference_clock,
            mode: self.config.mode,
        };
        let routing = self.set.route_utterance(utterance, &ctx);
        reply.events.extend(routing.events);
        reply.effects = routing.effects;
        reply.say(routing.utterance);
        if routing.accounted {
            self.sanction_level = 0;
        } else {
            self.sanction_level += 1;
            let level = self.sanction_level;
            reply.event(EventKind::SanctionStep, None, format!("level {level}"));
            let rung = self.policy.rung(level).clone();
            reply.say(self.policy.text(&rung));
            if rung == Rung::Disengage {
                reply.event(EventKind::Disengage, None, "");
                self.ended = true;
            }
        }
        Ok(self.finish(reply, utterance.timestamp))
    }

    pub fn handle_timeout(&mut self, now: u64) -> Result<SystemAction, EngineError> {
        self.live()?;
        let mut reply = ReplyBuilder::default();
        reply.events = self.abandon(now);
        let focus = self.set.focus.clone();
        reply.event(EventKind::TimeoutPrompt, focus.as_deref(), "");
        match focus {
            Some(id) => self.set.prompt(&id, &self.library, &mut reply),
            None => reply.say(OPENER),
        }
        Ok(self.finish(reply, now))
    }

    fn finish(&mut self, reply: ReplyBuilder, now: u64) -> SystemAction {
        let action = reply.finish(self.set.focus.clone());
        self.history.push(TranscriptEntry {
            speaker: Speaker::System,
            text: action.utterance.clone(),
            timestamp: now,
            events: action.events.clone(),
        });
        action
    }

    pub fn explain(&self) -> String {
        let speech = Speech {
            mode: self.config.mode,
        };
        let name = |id: &str| speech.name(self.library.get(id).unwrap()).to_string();
        let live: Vec<String> = self.set.active.iter().rev().map(|t| name(t.id())).collect();
        let waiting: Vec<String> = self.set.suspended.iter().rev().map(|t| name(t.id())).collect();
        let mut out = if live.is_empty() {
            if waiting.is_empty() {
                return "I am not doing anything yet".to_string();
            }
            "I am not doing anything right now".to_string()
        } else {
            format!("I am trying to: {}", live.join(" and "))
        };
        if !waiting.is_empty() {
            out.push_str(&format!(" (then: {})", waiting.join(", ")));
        }
        if !self.set.queued.is_empty() {
            let queued: Vec<String> = self.set.queued.iter().map(|q| name(q)).collect();
            out.push_str(&format!("; waiting to: {}", queued.join(", ")));
        }
        out
    }
}

impl Dialogue for TrajectorySession {
    fn handle_user_turn(&mut self, utterance: &Utterance) -> Result<SystemAction, EngineError> {
        TrajectorySession::handle_user_turn(self, utterance)
    }

    fn handle_timeout(&mut self, now: u64) -> Result<SystemAction, EngineError> {
        TrajectorySession::handle_timeout(self, now)
    }

    fn explain(&self) -> String {
        TrajectorySession::explain(self)
    }

    fn snapshot(&self) -> StateSnapshot {
        self.set.snapshot(&self.config, self.sanction_level)
    }

    fn transcript(&self) -> &Transcript {
        &self.history
    }

    fn sanction_level(&self) -> u32 {
        self.sanction_level
    }

    fn is_ended(&self) -> bool {
        self.ended
    }

    fn config(&self) -> &EngineConfig {
        &self.config
    }
}
