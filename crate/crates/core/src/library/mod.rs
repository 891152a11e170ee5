//! The plan library: behaviours written as VoiceXML-style forms.
//!
//! A behaviour is a form whose slots carry shallow information-extraction
//! rules and prompts. Trigger rules let a behaviour be picked up by talk that
//! fills none of its slots. Goal descriptions are carried for acknowledgment
//! and explanation only; nothing in arbitration reads them.

mod document;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use regex::Regex;
use thiserror::Error;

use crate::text;

pub use document::{BehaviourDoc, CaptureDoc, LibraryDocument, RuleDoc, SlotDoc};
pub use validate::{validate, Code, Finding, ValidationReport};

/// Normalizer names beginning with this prefix are built in, not declared.
pub const BUILTIN_PREFIX: char = '@';
/// Built-in normalizer that resolves relative dates against the reference clock.
pub const DATE_NORMALIZER: &str = "@date";

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("reference error at {location}: {message}")]
    Reference { location: String, message: String },
    #[error("duplicate behaviour id `{0}`")]
    DuplicateId(String),
    #[error("invalid library: {}", .0.errors.first().map(|f| f.to_string()).unwrap_or_default())]
    Invalid(ValidationReport),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no behaviour with id `{0}`")]
pub struct NotFound(pub String);

/// A compiled fill or trigger pattern.
#[derive(Debug, Clone)]
pub enum Pattern {
    /// A case-folded token sequence matched as a contiguous run.
    Literal { source: String, tokens: Vec<String> },
    /// Regular expression, written between slashes in the document.
    Regex { source: String, regex: Regex },
}

impl Pattern {
    pub fn parse(source: &str) -> Result<Self, String> {
        if let Some(body) = regex_body(source) {
            let regex = Regex::new(&format!("(?i){body}")).map_err(|e| e.to_string())?;
            Ok(Pattern::Regex {
                source: source.to_string(),
                regex,
            })
        } else {
            let tokens = text::token_texts(source);
            if tokens.is_empty() {
                return Err("literal pattern has no tokens".into());
            }
            Ok(Pattern::Literal {
                source: source.to_string(),
                tokens,
            })
        }
    }

    pub fn source(&self) -> &str {
        match self {
            Pattern::Literal { source, .. } | Pattern::Regex { source, .. } => source,
        }
    }

    /// Key used to compare patterns across behaviours.
    pub(crate) fn identity(&self) -> String {
        match self {
            Pattern::Literal { tokens, .. } => format!("lit:{}", tokens.join(" ")),
            Pattern::Regex { source, .. } => format!("re:{source}"),
        }
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source() == other.source()
    }
}

pub(crate) fn regex_body(source: &str) -> Option<&str> {
    if source.len() >= 2 && source.starts_with('/') && source.ends_with('/') {
        Some(&source[1..source.len() - 1])
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capture {
    /// Group 1 when the pattern has groups, otherwise the whole match.
    Default,
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillRule {
    pub id: String,
    pub pattern: Pattern,
    pub gazetteer: Option<String>,
    pub capture: Capture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub fill_rules: Vec<FillRule>,
    pub prompts: Vec<String>,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Behaviour {
    pub id: String,
    pub goal_description: Option<String>,
    pub trigger_rules: Vec<FillRule>,
    pub slots: Vec<Slot>,
    pub dependencies: Vec<String>,
    pub resources: Vec<String>,
    pub completion_effect: String,
}

impl Behaviour {
    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn required_slots(&self) -> impl Iterator<Item = &Slot> {
        self.slots.iter().filter(|s| s.required)
    }

    /// Behaviours without required slots never complete on their own; they
    /// run until switched away from or abandoned.
    pub fn is_open_ended(&self) -> bool {
        self.required_slots().next().is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub name: String,
    /// Case-folded surface form to canonical value.
    pub entries: BTreeMap<String, String>,
    /// Entries pre-tokenized, longest surface first.
    index: Vec<(Vec<String>, String)>,
}

impl Gazetteer {
    pub fn new(name: impl Into<String>, entries: impl IntoIterator<Item = (String, String)>) -> Self {
        let entries: BTreeMap<String, String> = entries
            .into_iter()
            .map(|(s, c)| (text::fold(&s), c))
            .collect();
        let mut index: Vec<(Vec<String>, String)> = entries
            .iter()
            .map(|(s, c)| (text::token_texts(s), c.clone()))
            .filter(|(toks, _)| !toks.is_empty())
            .collect();
        index.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then_with(|| token_chars(&b.0).cmp(&token_chars(&a.0)))
                .then_with(|| a.0.cmp(&b.0))
        });
        Gazetteer {
            name: name.into(),
            entries,
            index,
        }
    }

    pub(crate) fn index(&self) -> &[(Vec<String>, String)] {
        &self.index
    }
}

fn token_chars(tokens: &[String]) -> usize {
    tokens.iter().map(|t| t.chars().count()).sum()
}

/// An immutable, validated plan library. Safe to share across sessions.
#[derive(Debug, Clone)]
pub struct PlanLibrary {
    behaviours: Vec<Behaviour>,
    gazetteers: BTreeMap<String, Gazetteer>,
    positions: HashMap<String, usize>,
}

impl PartialEq for PlanLibrary {
    fn eq(&self, other: &Self) -> bool {
        self.behaviours == other.behaviours && self.gazetteers == other.gazetteers
    }
}

/// Parse and validate a plan-library document.
pub fn parse_library(text: &str) -> Result<PlanLibrary, LibraryError> {
    let doc = LibraryDocument::from_json(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof => LibraryError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data | Category::Io => LibraryError::Schema(e.to_string()),
        }
    })?;
    PlanLibrary::from_document(&doc)
}

/// Read and parse a plan-library file.
pub fn load_library(path: impl AsRef<Path>) -> Result<PlanLibrary, LibraryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_library(&text)
}

impl PlanLibrary {
    pub fn empty() -> Self {
        PlanLibrary {
            behaviours: Vec::new(),
            gazetteers: BTreeMap::new(),
            positions: HashMap::new(),
        }
    }

    pub fn from_document(doc: &LibraryDocument) -> Result<Self, LibraryError> {
        let report = validate(doc);
        if let Some(first) = report.errors.first() {
            return Err(match first.code {
                Code::DuplicateId => LibraryError::DuplicateId(first.subject.clone()),
                Code::UnknownGazetteer | Code::UnknownDependency => LibraryError::Reference {
                    location: first.location.clone(),
                    message: first.message.clone(),
                },
                _ => LibraryError::Invalid(report),
            });
        }

        let gazetteers = doc
            .gazetteers
            .iter()
            .map(|(name, entries)| {
                (
                    name.clone(),
                    Gazetteer::new(name.clone(), entries.clone()),
                )
            })
            .collect();
        let behaviours: Vec<Behaviour> = doc.behaviours.iter().map(compile_behaviour).collect();
        let positions = behaviours
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        Ok(PlanLibrary {
            behaviours,
            gazetteers,
            positions,
        })
    }

    pub fn to_document(&self) -> LibraryDocument {
        LibraryDocument {
            behaviours: self.behaviours.iter().map(behaviour_doc).collect(),
            gazetteers: self
                .gazetteers
                .iter()
                .map(|(n, g)| (n.clone(), g.entries.clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }

    /// Behaviours in document order.
    pub fn behaviours(&self) -> &[Behaviour] {
        &self.behaviours
    }

    pub fn len(&self) -> usize {
        self.behaviours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviours.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Result<&Behaviour, NotFound> {
        self.get(id).ok_or_else(|| NotFound(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Option<&Behaviour> {
        self.positions.get(id).map(|&i| &self.behaviours[i])
    }

    /// Document position of a behaviour; arbitration ties break on this.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn gazetteer(&self, name: &str) -> Option<&Gazetteer> {
        self.gazetteers.get(name)
    }

    pub fn gazetteers(&self) -> impl Iterator<Item = &Gazetteer> {
        self.gazetteers.values()
    }

    /// Findings for this library. Errors are always empty for a loaded
    /// library; warnings may not be.
    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_document())
    }

    /// Copy of this library with every goal description removed.
    pub fn without_goals(&self) -> PlanLibrary {
        let mut lib = self.clone();
        for b in &mut lib.behaviours {
            b.goal_description = None;
        }
        lib
    }

    /// Copy of this library where every behaviour also claims `tag`.
    pub fn with_shared_resource(&self, tag: &str) -> PlanLibrary {
        let mut lib = self.clone();
        for b in &mut lib.behaviours {
            if !b.resources.iter().any(|r| r == tag) {
                b.resources.push(tag.to_string());
            }
        }
        lib
    }
}

fn compile_rule(doc: &RuleDoc) -> FillRule {
    FillRule {
        id: doc.id.clone(),
        pattern: Pattern::parse(&doc.pattern).expect("validated pattern"),
        gazetteer: doc.gazetteer.clone(),
        capture: match &doc.capture {
            None => Capture::Default,
            Some(CaptureDoc::Index(i)) => Capture::Index(*i),
            Some(CaptureDoc::Name(n)) => Capture::Name(n.clone()),
        },
    }
}

fn compile_behaviour(doc: &BehaviourDoc) -> Behaviour {
    Behaviour {
        id: doc.id.clone(),
        goal_description: doc.goal.clone(),
        trigger_rules: doc.triggers.iter().map(compile_rule).collect(),
        slots: doc
            .slots
            .iter()
            .map(|s| Slot {
                name: s.name.clone(),
                fill_rules: s.rules.iter().map(compile_rule).collect(),
                prompts: s.prompts.clone(),
                required: s.required,
            })
            .collect(),
        dependencies: doc.depends_on.clone(),
        resources: doc.resources.clone(),
        completion_effect: doc
            .effect
            .clone()
            .unwrap_or_else(|| format!("{}_completed", doc.id)),
    }
}

fn rule_doc(rule: &FillRule) -> RuleDoc {
    RuleDoc {
        id: rule.id.clone(),
        pattern: rule.pattern.source().to_string(),
        gazetteer: rule.gazetteer.clone(),
        capture: match &rule.capture {
            Capture::Default => None,
            Capture::Index(i) => Some(CaptureDoc::Index(*i)),
            Capture::Name(n) => Some(CaptureDoc::Name(n.clone())),
        },
    }
}

fn behaviour_doc(b: &Behaviour) -> BehaviourDoc {
    BehaviourDoc {
        id: b.id.clone(),
        goal: b.goal_description.clone(),
        triggers: b.trigger_rules.iter().map(rule_doc).collect(),
        slots: b
            .slots
            .iter()
            .map(|s| SlotDoc {
                name: s.name.clone(),
                required: s.required,
                rules: s.fill_rules.iter().map(rule_doc).collect(),
                prompts: s.prompts.clone(),
            })
            .collect(),
        depends_on: b.dependencies.clone(),
        resources: b.resources.clone(),
        effect: Some(b.completion_effect.clone()),
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}
