use std::path::Path;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use meshkit::{load_library, open, EngineConfig, Mode};
use meshkit_cli::chat::{run_chat, EndReason, EXPLAIN, QUIT};

fn library() -> Arc<meshkit::PlanLibrary> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/libraries/communicator.json");
    Arc::new(load_library(path).unwrap())
}

/// Feed `lines` to a chat, close the input and return what was printed.
fn chat(config: EngineConfig, lines: &[&str], verbose: bool) -> (EndReason, String) {
    let (mut dialogue, greeting) = open(library(), config);
    let (tx, rx) = mpsc::channel();
    for l in lines {
        tx.send(l.to_string()).unwrap();
    }
    drop(tx);
    let mut out = Vec::new();
    let reason = run_chat(dialogue.as_mut(), greeting, &rx, &mut out, verbose).unwrap();
    (reason, String::from_utf8(out).unwrap())
}

#[test]
fn greets_converses_and_stops_at_end_of_input() {
    let config = EngineConfig {
        greeting: Some("How can I help?".into()),
        ..EngineConfig::default()
    };
    let (reason, out) = chat(config, &["I want to book a flight", "", "the Waldorf Hotel"], false);
    assert_eq!(reason, EndReason::Eof);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "How can I help?");
    assert!(lines[1].starts_with("Oh, you want to book a flight."));
    assert!(lines[2].starts_with("Oh, you want to book a hotel."));
    assert_eq!(lines.len(), 3);
}

#[test]
fn explain_reports_commitments_without_a_turn() {
    let (_, out) = chat(EngineConfig::default(), &["I want to book a flight", "the Waldorf Hotel", EXPLAIN], false);
    assert_eq!(out.lines().last(), Some("I am trying to: book a hotel (then: book a flight)"));
}

#[test]
fn quit_and_disengage_end_the_chat() {
    let (reason, _) = chat(EngineConfig::default(), &[QUIT, "never read"], false);
    assert_eq!(reason, EndReason::Quit);
    let (reason, out) = chat(EngineConfig::default(), &["cheese burger"; 4], false);
    assert_eq!(reason, EndReason::Disengaged);
    assert_eq!(out.lines().last(), Some("Goodbye."));
}

#[test]
fn verbose_shows_events_and_goal_free_hides_goals() {
    let config = EngineConfig {
        mode: Mode::GoalFree,
        ..EngineConfig::default()
    };
    let (_, out) = chat(config, &["the Waldorf Hotel"], true);
    assert!(out.contains("[accounted_for_switch book_hotel]"), "{out}");
    assert!(out.contains("okay —"));
    assert!(!out.contains("you want to"));
}

#[test]
fn silence_lets_the_system_speak() {
    let config = EngineConfig {
        timeout_ms: 50,
        ..EngineConfig::default()
    };
    let (mut dialogue, _) = open(library(), config);
    let (tx, rx) = mpsc::channel();
    tx.send("I want to book a flight".to_string()).unwrap();
    let sender = std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(200));
        drop(tx);
    });
    let mut out = Vec::new();
    run_chat(dialogue.as_mut(), None, &rx, &mut out, true).unwrap();
    sender.join().unwrap();
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("[timeout_prompt book_flight]"), "{out}");
}
