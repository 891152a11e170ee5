//! What does an utterance contribute? Fill and trigger rules evaluated
//! against user text, with gazetteer and date normalization.

pub mod dates;

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::library::{Behaviour, Capture, FillRule, Gazetteer, Pattern, PlanLibrary, DATE_NORMALIZER};
use crate::text::{self, Token};
use crate::transcript::Speaker;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    /// Milliseconds since session start.
    pub timestamp: u64,
    pub speaker: Speaker,
}

impl Utterance {
    pub fn user(text: impl Into<String>, timestamp: u64) -> Self {
        Utterance {
            text: text.into(),
            timestamp,
            speaker: Speaker::User,
        }
    }
}

/// A slot value extracted from an utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fill {
    pub slot: String,
    pub value: String,
    /// Character offsets of the whole rule match.
    pub span: (usize, usize),
    pub rule_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub behaviour_id: String,
    pub fills: Vec<Fill>,
    pub triggered: bool,
}

impl MatchResult {
    /// The utterance advances the behaviour.
    pub fn meshes(&self) -> bool {
        self.triggered || !self.fills.is_empty()
    }
}

/// Case-folded, longest-surface-first gazetteer lookup. Ties on length go to
/// the earliest occurrence in `surface`.
pub fn normalize(surface: &str, gazetteer: &Gazetteer) -> Option<String> {
    let tokens = text::tokenize(surface);
    let mut best: Option<(usize, usize, &str)> = None;
    for (entry, canonical) in gazetteer.index() {
        if let Some(best) = best {
            if entry.len() < best.0 {
                break;
            }
        }
        if let Some(pos) = text::find_run(&tokens, entry) {
            match best {
                Some((len, bpos, _)) if len == entry.len() && bpos <= pos => {}
                _ => best = Some((entry.len(), pos, canonical)),
            }
        }
    }
    best.map(|(_, _, c)| c.to_string())
}

struct Hit {
    span: (usize, usize),
    value: String,
}

/// Evaluates rules for one library under a fixed reference clock.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'a> {
    library: &'a PlanLibrary,
    reference: DateTime<Utc>,
}

impl<'a> Matcher<'a> {
    pub fn new(library: &'a PlanLibrary, reference: DateTime<Utc>) -> Self {
        Matcher { library, reference }
    }

    pub fn library(&self) -> &'a PlanLibrary {
        self.library
    }

    fn day_of(&self, utterance: &Utterance) -> NaiveDate {
        let offset = Duration::milliseconds(utterance.timestamp.min(i64::MAX as u64) as i64);
        (self.reference + offset).date_naive()
    }

    fn value_of(&self, rule: &FillRule, captured: &str, day: NaiveDate) -> Option<String> {
        match rule.gazetteer.as_deref() {
            None => {
                let v = text::trim_edges(captured);
                (!v.is_empty()).then(|| v.to_string())
            }
            Some(DATE_NORMALIZER) => dates::canonical_date(captured, day),
            Some(name) => normalize(captured, self.library.gazetteer(name)?),
        }
    }

    fn apply(&self, rule: &FillRule, utterance: &str, tokens: &[Token], day: NaiveDate) -> Option<Hit> {
        match &rule.pattern {
            Pattern::Literal { tokens: needle, .. } => {
                let at = text::find_run(tokens, needle)?;
                let span = (tokens[at].start, tokens[at + needle.len() - 1].end);
                let captured = text::char_slice(utterance, span.0, span.1);
                let value = self.value_of(rule, &captured, day)?;
                Some(Hit { span, value })
            }
            Pattern::Regex { regex, .. } => regex.captures_iter(utterance).find_map(|caps| {
                let whole = caps.get(0)?;
                let group = match &rule.capture {
                    Capture::Default if caps.len() > 1 => caps.get(1),
                    Capture::Default => Some(whole),
                    Capture::Index(i) => caps.get(*i),
                    Capture::Name(n) => caps.name(n),
                }?;
                let value = self.value_of(rule, group.as_str(), day)?;
                let span = (
                    text::char_offset(utterance, whole.start()),
                    text::char_offset(utterance, whole.end()),
                );
                Some(Hit { span, value })
            }),
        }
    }

    /// Fills for the unfilled slots of `behaviour` (first matching rule per
    /// slot) and whether any trigger rule fired.
    pub fn match_utterance(
        &self,
        utterance: &Utterance,
        behaviour: &Behaviour,
        already_filled: &BTreeSet<String>,
    ) -> MatchResult {
        let text = utterance.text.as_str();
        let tokens = text::tokenize(text);
        let day = self.day_of(utterance);

        let fills = behaviour
            .slots
            .iter()
            .filter(|slot| !already_filled.contains(&slot.name))
            .filter_map(|slot| {
                slot.fill_rules.iter().find_map(|rule| {
                    self.apply(rule, text, &tokens, day).map(|hit| Fill {
                        slot: slot.name.clone(),
                        value: hit.value,
                        span: hit.span,
                        rule_id: rule.id.clone(),
                    })
                })
            })
            .collect();
        let triggered = behaviour
            .trigger_rules
            .iter()
            .any(|rule| self.apply(rule, text, &tokens, day).is_some());

        MatchResult {
            behaviour_id: behaviour.id.clone(),
            fills,
            triggered,
        }
    }

    /// Every behaviour outside `exclude` that could do something with what
    /// was said, in library order.
    pub fn scan_library(&self, utterance: &Utterance, exclude: &BTreeSet<String>) -> Vec<MatchResult> {
        let empty = BTreeSet::new();
        self.library
            .behaviours()
            .iter()
            .filter(|b| !exclude.contains(&b.id))
            .map(|b| self.match_utterance(utterance, b, &empty))
            .filter(MatchResult::meshes)
            .collect()
    }
}

/// Preferred candidate: most fills, then earliest in library order.
pub fn select_candidate(results: &[MatchResult]) -> Option<&MatchResult> {
    results
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.fills.len().cmp(&b.fills.len()).then(ib.cmp(ia)))
        .map(|(_, r)| r)
}
