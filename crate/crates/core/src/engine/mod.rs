//! Arbitration: commit to a behaviour, notice when talk stops meshing with
//! it, account for the talk with another behaviour or move toward sanction.

pub mod config;
pub mod events;
pub mod sanction;
pub mod session;
pub(crate) mod speech;
pub mod state;

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

pub use config::{EngineConfig, Modality, Mode};
pub use events::{EventKind, MeshEvent, SystemAction};
pub use sanction::{Rung, SanctionPolicy};
pub use session::{start_session, Session};
pub use speech::{FLOOR_OFFER, OPENER, UPTAKE};
pub use state::{BehaviourInstance, ConversationState, InstanceStatus, InstanceView, StateSnapshot};

use crate::library::{Behaviour, PlanLibrary};
use crate::matcher::Utterance;
use crate::trajectories::TrajectorySession;
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("the session has ended")]
    SessionEnded,
    #[error("only user utterances can be handled as user turns")]
    NotUserTurn,
    #[error("no behaviour is in focus")]
    NoFocus,
    #[error("cannot complete {behaviour_id}: missing {}", missing.join(", "))]
    PreconditionFailed {
        behaviour_id: String,
        missing: Vec<String>,
    },
}

/// All of `behaviour`'s dependencies have completed.
pub(crate) fn can_trigger(completed: &BTreeSet<&str>, behaviour: &Behaviour) -> bool {
    behaviour
        .dependencies
        .iter()
        .all(|d| completed.contains(d.as_str()))
}

/// The behaviour to run before `behaviour` can: depth-first through the
/// dependency graph, first unmet dependency whose own dependencies are met.
pub(crate) fn first_unmet_prerequisite<'l>(
    library: &'l PlanLibrary,
    completed: &BTreeSet<&str>,
    behaviour: &Behaviour,
) -> Option<&'l Behaviour> {
    fn visit<'l>(
        library: &'l PlanLibrary,
        completed: &BTreeSet<&str>,
        behaviour: &Behaviour,
        seen: &mut BTreeSet<String>,
    ) -> Option<&'l Behaviour> {
        for dep in &behaviour.dependencies {
            if completed.contains(dep.as_str()) || !seen.insert(dep.clone()) {
                continue;
            }
            let dep = library.get(dep)?;
            if can_trigger(completed, dep) {
                return Some(dep);
            }
            if let Some(found) = visit(library, completed, dep, seen) {
                return Some(found);
            }
        }
        None
    }
    visit(library, completed, behaviour, &mut BTreeSet::new())
}

/// A running conversation, whatever its modality.
pub trait Dialogue: Send {
    fn handle_user_turn(&mut self, utterance: &Utterance) -> Result<SystemAction, EngineError>;
    /// The user has been silent; `now` is milliseconds since session start.
    fn handle_timeout(&mut self, now: u64) -> Result<SystemAction, EngineError>;
    fn explain(&self) -> String;
    fn snapshot(&self) -> StateSnapshot;
    fn transcript(&self) -> &Transcript;
    fn sanction_level(&self) -> u32;
    fn is_ended(&self) -> bool;
    fn config(&self) -> &EngineConfig;
}

/// Start a conversation in the configured modality. Sequential sessions use
/// the single-focus engine; parallel ones use trajectories.
pub fn open(library: Arc<PlanLibrary>, config: EngineConfig) -> (Box<dyn Dialogue>, Option<SystemAction>) {
    match config.modality {
        Modality::Sequential => {
            let (s, greeting) = Session::start(library, config);
            (Box::new(s), greeting)
        }
        Modality::Parallel => {
            let (s, greeting) = TrajectorySession::start(library, config);
            (Box::new(s), greeting)
        }
    }
}
