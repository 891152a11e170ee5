//! Terminal conversation.

use std::io::Write;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use anyhow::Result;
use meshkit::{Dialogue, SystemAction, Utterance};

pub const EXPLAIN: &str = "/explain";
pub const QUIT: &str = "/quit";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    Eof,
    Quit,
    Disengaged,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::Eof => "eof",
            EndReason::Quit => "quit",
            EndReason::Disengaged => "disengaged",
        }
    }
}

fn show(out: &mut dyn Write, action: &SystemAction, verbose: bool) -> Result<()> {
    if verbose {
        for e in &action.events {
            let id = e.behaviour_id.as_deref().unwrap_or("-");
            if e.detail.is_empty() {
                writeln!(out, "  [{} {id}]", e.kind.as_str())?;
            } else {
                writeln!(out, "  [{} {id} {}]", e.kind.as_str(), e.detail)?;
            }
        }
    }
    if !action.utterance.is_empty() {
        writeln!(out, "{}", action.utterance)?;
    }
    out.flush()?;
    Ok(())
}

/// Converse until the input closes, the user quits or the system disengages.
/// Silence longer than the configured timeout lets the system speak first.
pub fn run_chat(
    dialogue: &mut dyn Dialogue,
    greeting: Option<SystemAction>,
    input: &Receiver<String>,
    out: &mut dyn Write,
    verbose: bool,
) -> Result<EndReason> {
    let started = Instant::now();
    let idle = Duration::from_millis(dialogue.config().timeout_ms.max(1));
    if let Some(g) = greeting {
        show(out, &g, verbose)?;
    }
    loop {
        let now = || started.elapsed().as_millis() as u64;
        let action = match input.recv_timeout(idle) {
            Ok(line) => {
                let line = line.trim();
                match line {
                    "" => continue,
                    EXPLAIN => {
                        writeln!(out, "{}", dialogue.explain())?;
                        continue;
                    }
                    QUIT => return Ok(EndReason::Quit),
                    text => dialogue.handle_user_turn(&Utterance::user(text, now()))?,
                }
            }
            Err(RecvTimeoutError::Timeout) => dialogue.handle_timeout(now())?,
            Err(RecvTimeoutError::Disconnected) => return Ok(EndReason::Eof),
        };
        show(out, &action, verbose)?;
        if dialogue.is_ended() {
            return Ok(EndReason::Disengaged);
        }
    }
}
