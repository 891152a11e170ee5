//! A dialog manager that commits to behaviours instead of guessing intentions.
//!
//! A [`PlanLibrary`] holds slot-filling behaviours. A [`Session`] commits to
//! one at a time and checks every user turn against it: talk that meshes is
//! consumed, talk that fits another behaviour causes a switch, and talk that
//! fits nothing moves the conversation toward sanction. [`TrajectorySession`]
//! runs several behaviours side by side for chat-style conversation.

pub mod engine;
pub mod harness;
pub mod library;
pub mod matcher;
pub mod text;
pub mod trajectories;
pub mod transcript;

pub use engine::{
    open, start_session, BehaviourInstance, ConversationState, Dialogue, EngineConfig, EngineError, EventKind,
    InstanceStatus, InstanceView, MeshEvent, Modality, Mode, Rung, SanctionPolicy, Session, StateSnapshot,
    SystemAction,
};
pub use harness::{
    record_golden, run_scenario, run_suite, Expectation, HarnessError, ScenarioResult, Script, ScriptError, Step,
    SuiteSummary,
};
pub use library::{
    load_library, parse_library, validate, Behaviour, Capture, FillRule, Gazetteer, LibraryDocument, LibraryError,
    NotFound, Pattern, PlanLibrary, Slot, ValidationReport,
};
pub use matcher::{normalize, select_candidate, Fill, MatchResult, Matcher, Utterance};
pub use trajectories::{detect_bump, BumpEvent, Trajectory, TrajectorySession, TrajectorySet};
pub use transcript::{Speaker, Transcript, TranscriptEntry};
