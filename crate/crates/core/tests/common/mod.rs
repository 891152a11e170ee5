//! Random libraries and conversations, and a brute-force matcher written
//! without any of the crate's matching code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use meshkit::library::{BehaviourDoc, LibraryDocument, RuleDoc, SlotDoc};
use meshkit::{Fill, MatchResult, PlanLibrary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
];
pub const KEYS: &[&str] = &["to", "from", "at"];
pub const RESOURCES: &[&str] = &["r1", "r2", "r3"];
const PUNCT: &[&str] = &["", "", "", "!", "?", ".", ","];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rule(id: String, pattern: String, gazetteer: Option<String>) -> RuleDoc {
    RuleDoc {
        id,
        pattern,
        gazetteer,
        capture: None,
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect()
}

/// A valid library of up to `max_behaviours` behaviours over a small
/// vocabulary, with literal and regex rules, gazetteers, dependencies and
/// resources.
pub fn random_library(rng: &mut ChaCha8Rng, max_behaviours: usize) -> LibraryDocument {
    let mut gazetteers = BTreeMap::new();
    for g in 0..2 {
        let mut entries = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for e in 0..rng.gen_range(2..=5) {
            let n = rng.gen_range(1..=2);
            let surface = words(rng, n).join(" ");
            if seen.insert(surface.clone()) {
                entries.insert(surface, format!("G{g}_{e}"));
            }
        }
        gazetteers.insert(format!("g{g}"), entries);
    }
    let gnames: Vec<String> = gazetteers.keys().cloned().collect();

    let n = rng.gen_range(1..=max_behaviours);
    let mut behaviours = Vec::new();
    for i in 0..n {
        let id = format!("b{i}");
        let mut triggers = Vec::new();
        for t in 0..rng.gen_range(0..=2) {
            let pattern = if rng.gen_bool(0.5) {
                let k = rng.gen_range(1..=2);
                words(rng, k).join(" ")
            } else {
                let alts = words(rng, 2).join("|");
                format!("/\\b(?:{alts})\\b/")
            };
            triggers.push(rule(format!("t{t}"), pattern, None));
        }
        let mut slots = Vec::new();
        let n_slots = if triggers.is_empty() {
            rng.gen_range(1..=3)
        } else {
            rng.gen_range(0..=3)
        };
        for s in 0..n_slots {
            let mut rules = Vec::new();
            for r in 0..rng.gen_range(1..=2) {
                let gaz = gnames.choose(rng).cloned();
                let id = format!("s{s}r{r}");
                rules.push(match rng.gen_range(0..5) {
                    0 => {
                        let k = rng.gen_range(1..=2);
                        rule(id, words(rng, k).join(" "), gaz.filter(|_| rng.gen_bool(0.5)))
                    }
                    1 => {
                        let key = KEYS.choose(rng).unwrap();
                        rule(id, format!("/\\b{key}\\s+(\\w+)/"), gaz.filter(|_| rng.gen_bool(0.7)))
                    }
                    2 => rule(id, "/(.+)/".into(), gaz),
                    3 => rule(id, "/\\b(\\d+)\\b/".into(), None),
                    _ => {
                        let k = rng.gen_range(1..=2);
                        rule(id, words(rng, k).join(" "), None)
                    }
                });
            }
            let prompts = (0..rng.gen_range(1..=2)).map(|p| format!("b{i} s{s} prompt {p}?")).collect();
            slots.push(SlotDoc {
                name: format!("s{s}"),
                required: rng.gen_bool(0.85),
                rules,
                prompts,
            });
        }
        let mut depends_on = Vec::new();
        if i > 0 && rng.gen_bool(0.2) {
            depends_on.push(format!("b{}", rng.gen_range(0..i)));
        }
        let resources = RESOURCES
            .iter()
            .filter(|_| rng.gen_bool(0.3))
            .map(|r| r.to_string())
            .collect();
        behaviours.push(BehaviourDoc {
            goal: rng.gen_bool(0.8).then(|| format!("do thing {i}")),
            id,
            triggers,
            slots,
            depends_on,
            resources,
            effect: None,
        });
    }
    LibraryDocument {
        behaviours,
        gazetteers,
    }
}

pub fn load(doc: &LibraryDocument) -> PlanLibrary {
    PlanLibrary::from_document(doc).expect("generated libraries are valid")
}

/// An utterance of up to `max_tokens` tokens drawn from the library's
/// vocabulary, with random capitals and trailing punctuation.
pub fn random_utterance(rng: &mut ChaCha8Rng, max_tokens: usize) -> String {
    let n = rng.gen_range(0..=max_tokens);
    let mut toks: Vec<String> = (0..n)
        .map(|_| {
            let t = match rng.gen_range(0..10) {
                0..=5 => WORDS.choose(rng).unwrap().to_string(),
                6 | 7 => KEYS.choose(rng).unwrap().to_string(),
                _ => rng.gen_range(1..100).to_string(),
            };
            if rng.gen_bool(0.2) {
                t.to_uppercase()
            } else {
                t
            }
        })
        .collect();
    if let Some(last) = toks.last_mut() {
        last.push_str(PUNCT.choose(rng).unwrap());
    }
    toks.join(" ")
}

pub fn random_conversation(rng: &mut ChaCha8Rng, max_turns: usize) -> Vec<String> {
    let n = rng.gen_range(1..=max_turns);
    (0..n).map(|_| random_utterance(rng, 8)).collect()
}

// ---- brute-force oracle -------------------------------------------------

#[derive(Debug, Clone)]
struct Tok {
    raw: String,
    folded: String,
    start: usize,
    end: usize,
}

fn toks(text: &str) -> Vec<Tok> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = None;
    for i in 0..=chars.len() {
        let boundary = i == chars.len() || chars[i].is_whitespace();
        match (start, boundary) {
            (None, false) => start = Some(i),
            (Some(s), true) => {
                let mut a = s;
                let mut b = i;
                while a < b && !chars[a].is_alphanumeric() {
                    a += 1;
                }
                while b > a && !chars[b - 1].is_alphanumeric() {
                    b -= 1;
                }
                if a < b {
                    let raw: String = chars[a..b].iter().collect();
                    out.push(Tok {
                        folded: raw.to_lowercase(),
                        raw,
                        start: a,
                        end: b,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn folded_words(s: &str) -> Vec<String> {
    toks(s).into_iter().map(|t| t.folded).collect()
}

/// Every gazetteer entry at every position; longest wins, then earliest.
fn gaz_lookup(doc: &LibraryDocument, name: &str, surface: &str) -> Option<String> {
    let hay = folded_words(surface);
    let mut best: Option<(usize, usize, String)> = None;
    for (entry, canonical) in doc.gazetteers.get(name)? {
        let needle = folded_words(entry);
        if needle.is_empty() || needle.len() > hay.len() {
            continue;
        }
        for pos in 0..=hay.len() - needle.len() {
            if hay[pos..pos + needle.len()] == needle[..] {
                let better = match &best {
                    None => true,
                    Some((len, p, _)) => needle.len() > *len || (needle.len() == *len && pos < *p),
                };
                if better {
                    best = Some((needle.len(), pos, canonical.clone()));
                }
            }
        }
    }
    best.map(|(_, _, c)| c)
}

fn value(doc: &LibraryDocument, gazetteer: Option<&str>, captured: &str) -> Option<String> {
    match gazetteer {
        Some(g) => gaz_lookup(doc, g, captured),
        None => {
            let t = captured.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty()).then(|| t.to_string())
        }
    }
}

/// (span, value) for one rule of the shapes `random_library` generates.
fn try_rule(doc: &LibraryDocument, rule: &RuleDoc, text: &str) -> Option<((usize, usize), String)> {
    let t = toks(text);
    let gaz = rule.gazetteer.as_deref();
    let p = rule.pattern.as_str();
    if p == "/(.+)/" {
        let n = text.chars().count();
        return (n > 0).then(|| value(doc, gaz, text).map(|v| ((0, n), v))).flatten();
    }
    if p == "/\\b(\\d+)\\b/" {
        let tok = t.iter().find(|x| x.raw.chars().all(|c| c.is_ascii_digit()))?;
        return Some(((tok.start, tok.end), tok.raw.clone()));
    }
    if let Some(alts) = p.strip_prefix("/\\b(?:").and_then(|r| r.strip_suffix(")\\b/")) {
        let alts: Vec<&str> = alts.split('|').collect();
        let tok = t.iter().find(|x| alts.contains(&x.folded.as_str()))?;
        return Some(((tok.start, tok.end), tok.raw.clone()));
    }
    if let Some(key) = p.strip_prefix("/\\b").and_then(|r| r.strip_suffix("\\s+(\\w+)/")) {
        // Non-overlapping, leftmost-first, like a regex scan.
        let mut i = 0;
        while i + 1 < t.len() {
            if t[i].folded == key && t[i].end < t[i + 1].start {
                if let Some(v) = value(doc, gaz, &t[i + 1].raw) {
                    return Some(((t[i].start, t[i + 1].end), v));
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        return None;
    }
    assert!(!p.starts_with('/'), "oracle does not know pattern {p}");
    let needle = folded_words(p);
    if needle.len() > t.len() {
        return None;
    }
    let pos = (0..=t.len() - needle.len()).find(|&i| (0..needle.len()).all(|k| t[i + k].folded == needle[k]))?;
    let span = (t[pos].start, t[pos + needle.len() - 1].end);
    let captured: String = text.chars().skip(span.0).take(span.1 - span.0).collect();
    value(doc, gaz, &captured).map(|v| (span, v))
}

/// Exhaustively evaluate every rule of every non-excluded behaviour.
pub fn oracle_scan(doc: &LibraryDocument, text: &str, exclude: &BTreeSet<String>) -> Vec<MatchResult> {
    let mut out = Vec::new();
    for b in &doc.behaviours {
        if exclude.contains(&b.id) {
            continue;
        }
        let mut fills = Vec::new();
        for slot in &b.slots {
            for rule in &slot.rules {
                if let Some((span, v)) = try_rule(doc, rule, text) {
                    fills.push(Fill {
                        slot: slot.name.clone(),
                        value: v,
                        span,
                        rule_id: rule.id.clone(),
                    });
                    break;
                }
            }
        }
        let triggered = b.triggers.iter().any(|r| try_rule(doc, r, text).is_some());
        if triggered || !fills.is_empty() {
            out.push(MatchResult {
                behaviour_id: b.id.clone(),
                fills,
                triggered,
            });
        }
    }
    out
}

// ---- conversations ------------------------------------------------------

use std::sync::Arc;

use meshkit::{Dialogue, EngineConfig, EventKind, Session, SystemAction, TrajectorySession, Utterance};

/// Feed user turns one second apart, stopping at disengagement.
pub fn converse(dialogue: &mut dyn Dialogue, turns: &[String]) -> Vec<SystemAction> {
    let mut out = Vec::new();
    for (i, t) in turns.iter().enumerate() {
        if dialogue.is_ended() {
            break;
        }
        out.push(
            dialogue
                .handle_user_turn(&Utterance::user(t.clone(), (i as u64 + 1) * 1000))
                .expect("live session accepts user turns"),
        );
    }
    out
}

pub fn run_sequential(lib: &PlanLibrary, config: EngineConfig, turns: &[String]) -> (Session, Vec<SystemAction>) {
    let (mut s, _) = Session::start(Arc::new(lib.clone()), config);
    let actions = converse(&mut s, turns);
    (s, actions)
}

pub fn run_trajectories(
    lib: &PlanLibrary,
    config: EngineConfig,
    turns: &[String],
) -> (TrajectorySession, Vec<SystemAction>) {
    let (mut s, _) = TrajectorySession::start(Arc::new(lib.clone()), config);
    let actions = converse(&mut s, turns);
    (s, actions)
}

pub fn event_keys(actions: &[SystemAction]) -> Vec<(EventKind, Option<String>)> {
    actions
        .iter()
        .flat_map(|a| a.events.iter().map(|e| (e.kind, e.behaviour_id.clone())))
        .collect()
}
