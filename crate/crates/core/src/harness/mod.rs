//! Scripted users replayed against the engine, with golden transcripts.

mod script;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use script::{Expectation, Script, Step};

use crate::engine::{open, EngineConfig, MeshEvent, SystemAction};
use crate::library::{load_library, LibraryError, PlanLibrary};
use crate::matcher::Utterance;
use crate::transcript::Transcript;

/// Simulated time between consecutive user turns.
pub const TURN_GAP_MS: u64 = 1000;
pub const SCRIPT_EXTENSION: &str = "script";
pub const GOLDEN_SUFFIX: &str = ".golden.jsonl";

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("malformed script: {0}")]
    Malformed(String),
    #[error("a script needs at least one step")]
    NoSteps,
    #[error("step {0}: exactly one of `user`, `timeout: true` or `expect` is required")]
    BadStep(usize),
    #[error("step {0}: an expectation needs at least one field")]
    EmptyExpectation(usize),
    #[error("step {step}: unknown behaviour `{id}`")]
    UnknownBehaviour { step: usize, id: String },
    #[error("step {step}: bad `utterance_matches` pattern: {message}")]
    BadPattern { step: usize, message: String },
    #[error("bad config override: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("library for `{script}`: {source}")]
    Library {
        script: String,
        #[source]
        source: LibraryError,
    },
    #[error("`{0}` fails its own expectations; golden not written")]
    ExpectationsFailed(String),
    #[error("no such directory: {0}")]
    MissingDirectory(PathBuf),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioResult {
    pub name: String,
    pub transcript: Transcript,
    pub events: Vec<MeshEvent>,
    pub failures: Vec<Failure>,
}

impl ScenarioResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// The golden file body.
    pub fn golden(&self) -> String {
        self.transcript.to_jsonl()
    }
}

/// Load the script's library and replay it.
pub fn run_scenario(script: &Script) -> Result<ScenarioResult, HarnessError> {
    let library = load_library(script.library_path()).map_err(|source| HarnessError::Library {
        script: script.name.clone(),
        source,
    })?;
    run_with_library(script, Arc::new(library))
}

/// Replay against an already loaded library. User turns are spaced
/// `TURN_GAP_MS` apart; a timeout step waits `timeout_ms`.
pub fn run_with_library(script: &Script, library: Arc<PlanLibrary>) -> Result<ScenarioResult, HarnessError> {
    let config = EngineConfig::default()
        .with_overrides(&script.config)
        .map_err(|e| ScriptError::Config(e.to_string()))?;
    let checks = compile_expectations(script, &library)?;

    let (mut dialogue, greeting) = open(library, config.clone());
    let mut last: Option<SystemAction> = greeting;
    let mut events = Vec::new();
    let mut failures = Vec::new();
    let mut now = 0u64;

    for (i, step) in script.steps.iter().enumerate() {
        let outcome = match step {
            Step::User(text) => {
                now += TURN_GAP_MS;
                dialogue.handle_user_turn(&Utterance::user(text.clone(), now))
            }
            Step::Timeout => {
                now += config.timeout_ms;
                dialogue.handle_timeout(now)
            }
            Step::Expect(expect) => {
                let pattern = checks[i].as_ref();
                if let Some(f) = check(i, expect, pattern, last.as_ref()) {
                    failures.push(f);
                }
                continue;
            }
        };
        match outcome {
            Ok(action) => {
                events.extend(action.events.iter().cloned());
                last = Some(action);
            }
            Err(e) => {
                failures.push(Failure {
                    step: i,
                    expected: "a live session".into(),
                    actual: e.to_string(),
                });
                last = None;
            }
        }
    }

    Ok(ScenarioResult {
        name: script.name.clone(),
        transcript: dialogue.transcript().clone(),
        events,
        failures,
    })
}

fn compile_expectations(script: &Script, library: &PlanLibrary) -> Result<Vec<Option<Regex>>, ScriptError> {
    script
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let Step::Expect(e) = step else { return Ok(None) };
            if let Some(id) = &e.behaviour_id {
                if library.get(id).is_none() {
                    return Err(ScriptError::UnknownBehaviour { step: i, id: id.clone() });
                }
            }
            e.utterance_matches
                .as_deref()
                .map(Regex::new)
                .transpose()
                .map_err(|err| ScriptError::BadPattern {
                    step: i,
                    message: err.to_string(),
                })
        })
        .collect()
}

fn describe(expect: &Expectation) -> String {
    let mut parts = Vec::new();
    if let Some(k) = expect.kind {
        parts.push(format!("kind={}", k.as_str()));
    }
    if let Some(b) = &expect.behaviour_id {
        parts.push(format!("behaviour_id={b}"));
    }
    if let Some(u) = &expect.utterance_matches {
        parts.push(format!("utterance~/{u}/"));
    }
    parts.join(" ")
}

fn check(step: usize, expect: &Expectation, pattern: Option<&Regex>, last: Option<&SystemAction>) -> Option<Failure> {
    let fail = |actual: String| {
        Some(Failure {
            step,
            expected: describe(expect),
            actual,
        })
    };
    let Some(action) = last else {
        return fail("no system action yet".into());
    };
    if expect.kind.is_some() || expect.behaviour_id.is_some() {
        let hit = action.events.iter().any(|e| {
            expect.kind.is_none_or(|k| e.kind == k)
                && expect
                    .behaviour_id
                    .as_deref()
                    .is_none_or(|b| e.behaviour_id.as_deref() == Some(b))
        });
        if !hit {
            let seen: Vec<String> = action
                .events
                .iter()
                .map(|e| match &e.behaviour_id {
                    Some(b) => format!("{}({b})", e.kind.as_str()),
                    None => e.kind.as_str().to_string(),
                })
                .collect();
            return fail(format!("events [{}]", seen.join(", ")));
        }
    }
    if let Some(re) = pattern {
        if !re.is_match(&action.utterance) {
            return fail(format!("utterance {:?}", action.utterance));
        }
    }
    None
}

/// Golden file that goes with a script: `<stem>.golden.jsonl` beside it.
pub fn golden_path(script_path: &Path) -> PathBuf {
    let stem = script_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    script_path.with_file_name(format!("{stem}{GOLDEN_SUFFIX}"))
}

/// Run the script and write its transcript as the golden file.
pub fn record_golden(script: &Script, path: &Path) -> Result<(), HarnessError> {
    let result = run_scenario(script)?;
    if !result.passed() {
        return Err(HarnessError::ExpectationsFailed(script.name.clone()));
    }
    std::fs::write(path, result.golden()).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Line-oriented comparison; empty when equal.
pub fn diff_lines(expected: &str, actual: &str) -> Vec<String> {
    let e: Vec<&str> = expected.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    let mut out = Vec::new();
    for i in 0..e.len().max(a.len()) {
        match (e.get(i), a.get(i)) {
            (Some(x), Some(y)) if x == y => {}
            (x, y) => {
                if let Some(x) = x {
                    out.push(format!("{}: - {x}", i + 1));
                }
                if let Some(y) = y {
                    out.push(format!("{}: + {y}", i + 1));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldenStatus {
    Matched,
    Written,
    Missing,
    Differs(Vec<String>),
    /// Not compared because the scenario could not run.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub path: PathBuf,
    pub name: String,
    pub failures: Vec<Failure>,
    pub golden: GoldenStatus,
    /// Set when the script or its library could not be loaded.
    pub error: Option<String>,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.failures.is_empty()
            && matches!(self.golden, GoldenStatus::Matched | GoldenStatus::Written)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteSummary {
    pub outcomes: Vec<ScenarioOutcome>,
    pub warnings: Vec<String>,
}

impl SuiteSummary {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed()).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.len() - self.passed()
    }

    /// 0 all passed, 1 some scenario failed, 2 something could not be loaded.
    pub fn exit_code(&self) -> i32 {
        if self.outcomes.iter().any(|o| o.error.is_some()) {
            2
        } else if self.failed() > 0 {
            1
        } else {
            0
        }
    }
}

/// Every `*.script` file in `dir`, sorted by name.
pub fn list_scripts(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::MissingDirectory(dir.to_path_buf()));
    }
    let entries = std::fs::read_dir(dir).map_err(|source| HarnessError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == SCRIPT_EXTENSION))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Run every script in `dir` and compare against, or rewrite, its golden.
pub fn run_suite(dir: &Path, update_golden: bool) -> Result<SuiteSummary, HarnessError> {
    let mut summary = SuiteSummary::default();
    let paths = list_scripts(dir)?;
    if paths.is_empty() {
        summary.warnings.push(format!("no .{SCRIPT_EXTENSION} files in {}", dir.display()));
    }
    for path in paths {
        summary.outcomes.push(run_one(&path, update_golden));
    }
    Ok(summary)
}

fn run_one(path: &Path, update_golden: bool) -> ScenarioOutcome {
    let mut outcome = ScenarioOutcome {
        path: path.to_path_buf(),
        name: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
        failures: vec![],
        golden: GoldenStatus::Skipped,
        error: None,
    };
    let result = Script::load(path)
        .map_err(HarnessError::from)
        .and_then(|s| {
            outcome.name = s.name.clone();
            run_scenario(&s)
        });
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    outcome.failures = result.failures.clone();
    let golden = golden_path(path);
    let actual = result.golden();
    outcome.golden = if update_golden {
        if !result.passed() {
            GoldenStatus::Skipped
        } else {
            match std::fs::write(&golden, &actual) {
                Ok(()) => GoldenStatus::Written,
                Err(e) => {
                    outcome.error = Some(format!("cannot write {}: {e}", golden.display()));
                    GoldenStatus::Skipped
                }
            }
        }
    } else {
        match std::fs::read_to_string(&golden) {
            Ok(expected) if expected == actual => GoldenStatus::Matched,
            Ok(expected) => GoldenStatus::Differs(diff_lines(&expected, &actual)),
            Err(_) => GoldenStatus::Missing,
        }
    };
    outcome
}
