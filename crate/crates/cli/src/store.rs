//! Append-only JSON-lines session files: a header, transcript entries as
//! they happen, and an end marker.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use meshkit::{EngineConfig, Transcript, TranscriptEntry};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Live,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub session_id: String,
    pub library_ref: String,
    pub config: EngineConfig,
    pub transcript: Transcript,
    pub status: SessionStatus,
    pub end_reason: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header {
        session_id: String,
        library: String,
        config: EngineConfig,
    },
    Entry(TranscriptEntry),
    End {
        reason: String,
    },
}

impl SessionRecord {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut record: Option<SessionRecord> = None;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
            match (parsed, record.as_mut()) {
                (
                    Line::Header {
                        session_id,
                        library,
                        config,
                    },
                    None,
                ) => {
                    record = Some(SessionRecord {
                        session_id,
                        library_ref: library,
                        config,
                        transcript: Transcript::new(),
                        status: SessionStatus::Live,
                        end_reason: None,
                    })
                }
                (Line::Entry(e), Some(r)) if r.status == SessionStatus::Live => r.transcript.push(e),
                (Line::End { reason }, Some(r)) if r.status == SessionStatus::Live => {
                    r.status = SessionStatus::Ended;
                    r.end_reason = Some(reason);
                }
                _ => bail!("{}:{}: record out of order", path.display(), n + 1),
            }
        }
        record.with_context(|| format!("{} has no header", path.display()))
    }
}

/// Writer for one session's file.
pub struct SessionLog {
    path: PathBuf,
    file: File,
    written: usize,
    ended: bool,
}

impl SessionLog {
    pub fn create(dir: &Path, session_id: &str, library_ref: &str, config: &EngineConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{session_id}.jsonl"));
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut log = SessionLog {
            path,
            file,
            written: 0,
            ended: false,
        };
        log.write(&Line::Header {
            session_id: session_id.to_string(),
            library: library_ref.to_string(),
            config: config.clone(),
        })?;
        Ok(log)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write(&mut self, line: &Line) -> Result<()> {
        let mut text = serde_json::to_string(line)?;
        text.push('\n');
        self.file.write_all(text.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }

    /// Append the entries of `transcript` not yet written.
    pub fn sync(&mut self, transcript: &Transcript) -> Result<()> {
        if self.ended {
            bail!("session log {} is closed", self.path.display());
        }
        let fresh: Vec<TranscriptEntry> = transcript.entries()[self.written..].to_vec();
        for e in fresh {
            self.write(&Line::Entry(e))?;
            self.written += 1;
        }
        Ok(())
    }

    pub fn end(&mut self, transcript: &Transcript, reason: &str) -> Result<()> {
        self.sync(transcript)?;
        self.write(&Line::End {
            reason: reason.to_string(),
        })?;
        self.ended = true;
        Ok(())
    }
}
