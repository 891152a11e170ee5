use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::document::{CaptureDoc, LibraryDocument, RuleDoc};
use super::{regex_body, Pattern, BUILTIN_PREFIX, DATE_NORMALIZER};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    DuplicateId,
    DuplicateSlot,
    UnknownGazetteer,
    UnknownDependency,
    CyclicDependency,
    UnreachableBehaviour,
    MissingPrompts,
    InvalidPattern,
    InvalidCapture,
    DuplicateSurface,
    EmptySurface,
    EmptyCanonical,
    ReservedGazetteer,
    AmbiguousTrigger,
    ShadowedRule,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::DuplicateId => "DUPLICATE_ID",
            Code::DuplicateSlot => "DUPLICATE_SLOT",
            Code::UnknownGazetteer => "UNKNOWN_GAZETTEER",
            Code::UnknownDependency => "UNKNOWN_DEPENDENCY",
            Code::CyclicDependency => "CYCLIC_DEPENDENCY",
            Code::UnreachableBehaviour => "UNREACHABLE_BEHAVIOUR",
            Code::MissingPrompts => "MISSING_PROMPTS",
            Code::InvalidPattern => "INVALID_PATTERN",
            Code::InvalidCapture => "INVALID_CAPTURE",
            Code::DuplicateSurface => "DUPLICATE_SURFACE",
            Code::EmptySurface => "EMPTY_SURFACE",
            Code::EmptyCanonical => "EMPTY_CANONICAL",
            Code::ReservedGazetteer => "RESERVED_GAZETTEER",
            Code::AmbiguousTrigger => "AMBIGUOUS_TRIGGER",
            Code::ShadowedRule => "SHADOWED_RULE",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub code: Code,
    pub location: String,
    pub message: String,
    /// The id or name the finding is about (behaviour id, gazetteer name...).
    #[serde(skip)]
    pub subject: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_loadable(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: Code) -> bool {
        self.errors.iter().chain(&self.warnings).any(|f| f.code == code)
    }

    fn error(&mut self, code: Code, location: String, subject: &str, message: String) {
        self.errors.push(Finding {
            code,
            location,
            message,
            subject: subject.to_string(),
        });
    }

    fn warn(&mut self, code: Code, location: String, subject: &str, message: String) {
        self.warnings.push(Finding {
            code,
            location,
            message,
            subject: subject.to_string(),
        });
    }
}

/// Check every library invariant and report ambiguity warnings.
pub fn validate(doc: &LibraryDocument) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = BTreeSet::new();
    for b in &doc.behaviours {
        if !seen.insert(b.id.as_str()) {
            report.error(
                Code::DuplicateId,
                format!("behaviours[{}]", b.id),
                &b.id,
                format!("behaviour id `{}` is declared more than once", b.id),
            );
        }
    }

    check_gazetteers(doc, &mut report);

    for b in &doc.behaviours {
        let at = format!("behaviours[{}]", b.id);
        if b.slots.is_empty() && b.triggers.is_empty() {
            report.error(
                Code::UnreachableBehaviour,
                at.clone(),
                &b.id,
                format!("behaviour `{}` has neither slots nor triggers", b.id),
            );
        }
        for (i, rule) in b.triggers.iter().enumerate() {
            check_rule(doc, rule, &format!("{at}.triggers[{i}]"), &mut report);
        }
        let mut slot_names = BTreeSet::new();
        for slot in &b.slots {
            let slot_at = format!("{at}.slots[{}]", slot.name);
            if !slot_names.insert(slot.name.as_str()) {
                report.error(
                    Code::DuplicateSlot,
                    slot_at.clone(),
                    &b.id,
                    format!("slot `{}` declared twice in `{}`", slot.name, b.id),
                );
            }
            if slot.required && slot.prompts.is_empty() {
                report.error(
                    Code::MissingPrompts,
                    slot_at.clone(),
                    &b.id,
                    format!("required slot `{}` of `{}` has no prompts", slot.name, b.id),
                );
            }
            for rule in &slot.rules {
                let rule_at = format!("{slot_at}.rules[{}]", rule.id);
                if let Some(g) = &rule.gazetteer {
                    if !gazetteer_resolves(doc, g) {
                        report.error(
                            Code::UnknownGazetteer,
                            rule_at.clone(),
                            g,
                            format!(
                                "slot `{}` of `{}` references undeclared gazetteer `{}`",
                                slot.name, b.id, g
                            ),
                        );
                    }
                }
                check_pattern(rule, &rule_at, &mut report);
            }
            check_shadowing(&b.id, &slot.name, &slot.rules, &slot_at, &mut report);
        }
        for dep in &b.depends_on {
            if !doc.behaviours.iter().any(|o| &o.id == dep) {
                report.error(
                    Code::UnknownDependency,
                    format!("{at}.depends_on"),
                    dep,
                    format!("`{}` depends on unknown behaviour `{}`", b.id, dep),
                );
            }
        }
    }

    check_cycles(doc, &mut report);
    check_ambiguous_triggers(doc, &mut report);
    report
}

fn gazetteer_resolves(doc: &LibraryDocument, name: &str) -> bool {
    name == DATE_NORMALIZER || doc.gazetteers.contains_key(name)
}

fn check_rule(doc: &LibraryDocument, rule: &RuleDoc, at: &str, report: &mut ValidationReport) {
    if let Some(g) = &rule.gazetteer {
        if !gazetteer_resolves(doc, g) {
            report.error(
                Code::UnknownGazetteer,
                at.to_string(),
                g,
                format!("rule `{}` references undeclared gazetteer `{}`", rule.id, g),
            );
        }
    }
    check_pattern(rule, at, report);
}

fn check_pattern(rule: &RuleDoc, at: &str, report: &mut ValidationReport) {
    let pattern = match Pattern::parse(&rule.pattern) {
        Ok(p) => p,
        Err(e) => {
            report.error(
                Code::InvalidPattern,
                at.to_string(),
                &rule.id,
                format!("pattern `{}` does not compile: {}", rule.pattern, e),
            );
            return;
        }
    };
    let Some(capture) = &rule.capture else { return };
    let ok = match (&pattern, capture) {
        (Pattern::Literal { .. }, CaptureDoc::Index(0)) => true,
        (Pattern::Literal { .. }, _) => false,
        (Pattern::Regex { regex, .. }, CaptureDoc::Index(i)) => *i < regex.captures_len(),
        (Pattern::Regex { regex, .. }, CaptureDoc::Name(n)) => {
            regex.capture_names().flatten().any(|c| c == n)
        }
    };
    if !ok {
        report.error(
            Code::InvalidCapture,
            at.to_string(),
            &rule.id,
            format!("capture {:?} does not exist in `{}`", capture, rule.pattern),
        );
    }
}

fn check_gazetteers(doc: &LibraryDocument, report: &mut ValidationReport) {
    for (name, entries) in &doc.gazetteers {
        let at = format!("gazetteers[{name}]");
        if name.starts_with(BUILTIN_PREFIX) {
            report.error(
                Code::ReservedGazetteer,
                at.clone(),
                name,
                format!("gazetteer names starting with `{BUILTIN_PREFIX}` are reserved"),
            );
        }
        let mut folded: BTreeMap<String, &str> = BTreeMap::new();
        for (surface, canonical) in entries {
            let tokens = text::token_texts(surface);
            if let Some(prev) = folded.insert(tokens.join(" "), surface).filter(|_| !tokens.is_empty()) {
                report.error(
                    Code::DuplicateSurface,
                    at.clone(),
                    name,
                    format!("surface forms `{prev}` and `{surface}` collide after tokenizing"),
                );
            }
            if tokens.is_empty() {
                report.error(
                    Code::EmptySurface,
                    at.clone(),
                    name,
                    format!("surface form `{surface}` has no tokens"),
                );
            }
            if canonical.trim().is_empty() {
                report.error(
                    Code::EmptyCanonical,
                    at.clone(),
                    name,
                    format!("surface form `{surface}` maps to an empty value"),
                );
            }
        }
    }
}

/// A rule that always fills whenever it matches, on anything non-blank.
fn is_catch_all(rule: &RuleDoc) -> bool {
    if rule.gazetteer.is_some() {
        return false;
    }
    let Some(body) = regex_body(&rule.pattern) else {
        return false;
    };
    let body = body.trim_start_matches('^').trim_end_matches('$');
    matches!(
        body,
        ".*" | ".+" | "(.*)" | "(.+)" | ".*?" | ".+?" | "(.*?)" | "(.+?)"
    )
}

fn literal_tokens(rule: &RuleDoc) -> Option<Vec<String>> {
    if regex_body(&rule.pattern).is_some() {
        return None;
    }
    Some(text::token_texts(&rule.pattern))
}

/// Does `earlier` match (and fill) on every input where `later` would?
fn shadows(earlier: &RuleDoc, later: &RuleDoc) -> bool {
    if is_catch_all(earlier) {
        return true;
    }
    if earlier.pattern == later.pattern
        && earlier.gazetteer == later.gazetteer
        && earlier.capture == later.capture
    {
        return true;
    }
    if earlier.gazetteer.is_some() {
        return false;
    }
    match (literal_tokens(earlier), literal_tokens(later)) {
        (Some(e), Some(l)) if !e.is_empty() && e.len() <= l.len() => {
            l.windows(e.len()).any(|w| w == e.as_slice())
        }
        _ => false,
    }
}

fn check_shadowing(
    behaviour: &str,
    slot: &str,
    rules: &[RuleDoc],
    at: &str,
    report: &mut ValidationReport,
) {
    for (j, later) in rules.iter().enumerate() {
        if let Some(earlier) = rules[..j].iter().find(|e| shadows(e, later)) {
            report.warn(
                Code::ShadowedRule,
                format!("{at}.rules[{}]", later.id),
                behaviour,
                format!(
                    "rule `{}` of slot `{}` is unreachable behind `{}`",
                    later.id, slot, earlier.id
                ),
            );
        }
    }
}

fn check_cycles(doc: &LibraryDocument, report: &mut ValidationReport) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Open,
        Done,
    }
    let index: HashMap<&str, usize> = doc
        .behaviours
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut marks = vec![Mark::Fresh; doc.behaviours.len()];
    let mut reported = BTreeSet::new();

    fn visit(
        i: usize,
        doc: &LibraryDocument,
        index: &HashMap<&str, usize>,
        marks: &mut [Mark],
        path: &mut Vec<usize>,
        reported: &mut BTreeSet<Vec<usize>>,
        report: &mut ValidationReport,
    ) {
        marks[i] = Mark::Open;
        path.push(i);
        for dep in &doc.behaviours[i].depends_on {
            let Some(&j) = index.get(dep.as_str()) else { continue };
            match marks[j] {
                Mark::Open => {
                    let from = path.iter().position(|&p| p == j).unwrap();
                    let mut cycle: Vec<usize> = path[from..].to_vec();
                    let mut key = cycle.clone();
                    key.sort_unstable();
                    if reported.insert(key) {
                        cycle.push(j);
                        let names: Vec<&str> =
                            cycle.iter().map(|&k| doc.behaviours[k].id.as_str()).collect();
                        report.error(
                            Code::CyclicDependency,
                            format!("behaviours[{}].depends_on", doc.behaviours[j].id),
                            &doc.behaviours[j].id,
                            format!("dependency cycle {}", names.join(" -> ")),
                        );
                    }
                }
                Mark::Fresh => visit(j, doc, index, marks, path, reported, report),
                Mark::Done => {}
            }
        }
        path.pop();
        marks[i] = Mark::Done;
    }

    for i in 0..doc.behaviours.len() {
        if marks[i] == Mark::Fresh {
            visit(i, doc, &index, &mut marks, &mut Vec::new(), &mut reported, report);
        }
    }
}

fn trigger_identity(rule: &RuleDoc) -> Option<String> {
    // Uncompilable patterns are already reported; skip them here.
    Pattern::parse(&rule.pattern).ok().map(|p| p.identity())
}

fn check_ambiguous_triggers(doc: &LibraryDocument, report: &mut ValidationReport) {
    let mut owners: Vec<(String, Vec<&str>)> = Vec::new();
    for b in &doc.behaviours {
        for rule in &b.triggers {
            let Some(key) = trigger_identity(rule) else { continue };
            match owners.iter_mut().find(|(k, _)| *k == key) {
                Some((_, ids)) => {
                    if !ids.contains(&b.id.as_str()) {
                        ids.push(&b.id);
                    }
                }
                None => owners.push((key, vec![&b.id])),
            }
        }
    }
    for (key, ids) in owners {
        if ids.len() > 1 {
            report.warn(
                Code::AmbiguousTrigger,
                "behaviours".to_string(),
                ids[0],
                format!("trigger `{}` is shared by {}", key, ids.join(", ")),
            );
        }
    }
}
