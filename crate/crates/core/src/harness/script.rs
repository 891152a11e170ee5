use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ScriptError;
use crate::engine::EventKind;

/// What a step expects of the system's most recent action.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EventKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behaviour_id: Option<String>,
    /// Regular expression searched for in the reply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance_matches: Option<String>,
}

impl Expectation {
    pub fn is_empty(&self) -> bool {
        self.kind.is_none() && self.behaviour_id.is_none() && self.utterance_matches.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    User(String),
    Timeout,
    Expect(Expectation),
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    user: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timeout: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expect: Option<Expectation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptDoc {
    name: String,
    library: PathBuf,
    #[serde(default)]
    config: Value,
    steps: Vec<StepDoc>,
}

/// A scripted user: utterances, silences and expectations, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub name: String,
    /// Library path as written; relative paths are taken from the script's
    /// directory.
    pub library: PathBuf,
    /// Engine config keys to override.
    pub config: Value,
    pub steps: Vec<Step>,
    origin: Option<PathBuf>,
}

impl Script {
    pub fn new(name: impl Into<String>, library: impl Into<PathBuf>, steps: Vec<Step>) -> Self {
        Script {
            name: name.into(),
            library: library.into(),
            config: Value::Object(Default::default()),
            steps,
            origin: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let doc: ScriptDoc = serde_json::from_str(text).map_err(|e| ScriptError::Malformed(e.to_string()))?;
        if doc.steps.is_empty() {
            return Err(ScriptError::NoSteps);
        }
        if !(doc.config.is_null() || doc.config.is_object()) {
            return Err(ScriptError::Malformed("`config` must be an object".into()));
        }
        let steps = doc
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| match (s.user, s.timeout, s.expect) {
                (Some(text), None, None) => Ok(Step::User(text)),
                (None, Some(true), None) => Ok(Step::Timeout),
                (None, None, Some(e)) if e.is_empty() => Err(ScriptError::EmptyExpectation(i)),
                (None, None, Some(e)) => Ok(Step::Expect(e)),
                _ => Err(ScriptError::BadStep(i)),
            })
            .collect::<Result<_, _>>()?;
        Ok(Script {
            name: doc.name,
            library: doc.library,
            config: if doc.config.is_null() {
                Value::Object(Default::default())
            } else {
                doc.config
            },
            steps,
            origin: None,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScriptError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut script = Self::parse(&text)?;
        script.origin = Some(path.to_path_buf());
        Ok(script)
    }

    /// Where the script was loaded from, if it came from a file.
    pub fn origin(&self) -> Option<&Path> {
        self.origin.as_deref()
    }

    pub fn library_path(&self) -> PathBuf {
        match self.origin.as_deref().and_then(Path::parent) {
            Some(dir) if self.library.is_relative() => dir.join(&self.library),
            _ => self.library.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let steps: Vec<StepDoc> = self
            .steps
            .iter()
            .map(|s| match s {
                Step::User(t) => StepDoc {
                    user: Some(t.clone()),
                    timeout: None,
                    expect: None,
                },
                Step::Timeout => StepDoc {
                    user: None,
                    timeout: Some(true),
                    expect: None,
                },
                Step::Expect(e) => StepDoc {
                    user: None,
                    timeout: None,
                    expect: Some(e.clone()),
                },
            })
            .collect();
        let doc = serde_json::json!({
            "name": self.name,
            "library": self.library,
            "config": self.config,
            "steps": steps,
        });
        serde_json::to_string_pretty(&doc).expect("scripts serialize")
    }
}
