//! Append-only event log: one JSON object per line.
//!
//! ```text
//! {"v":1,"id":0,"session_id":"s-1","tick":0,"wall_time":0.0,"kind":"page_enter","page":{"type":"market"}}
//! {"v":1,"id":1,"session_id":"s-1","tick":0,"wall_time":12.5,"kind":"page_leave","page":{"type":"market"}}
//! ```

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::event::SessionEvent;

pub const EVENT_LOG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unsupported event log version {version}")]
    Version { line: usize, version: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize)]
struct RecordOut<'a> {
    v: u32,
    #[serde(flatten)]
    event: &'a SessionEvent,
}

#[derive(Deserialize)]
struct RecordIn {
    v: u32,
    #[serde(flatten)]
    event: SessionEvent,
}

pub fn encode_event(event: &SessionEvent) -> String {
    serde_json::to_string(&RecordOut { v: EVENT_LOG_VERSION, event }).expect("event serializes")
}

pub fn decode_event(line: &str, line_no: usize) -> Result<SessionEvent, LogError> {
    let rec: RecordIn = serde_json::from_str(line)
        .map_err(|e| LogError::Malformed { line: line_no, message: e.to_string() })?;
    if rec.v != EVENT_LOG_VERSION {
        return Err(LogError::Version { line: line_no, version: rec.v });
    }
    Ok(rec.event)
}

pub fn append_events<'a, W: Write>(out: &mut W, events: impl IntoIterator<Item = &'a SessionEvent>) -> io::Result<()> {
    for e in events {
        writeln!(out, "{}", encode_event(e))?;
    }
    Ok(())
}

/// Reads a log, failing on the first bad line. Blank lines are skipped.
pub fn read_log<R: BufRead>(input: R) -> Result<Vec<SessionEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(decode_event(&line, i + 1)?);
    }
    Ok(events)
}

/// Reads a log, collecting bad lines instead of failing.
pub fn read_log_lenient<R: BufRead>(input: R) -> (Vec<SessionEvent>, Vec<LogError>) {
    let mut events = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in input.lines().enumerate() {
        match line {
            Ok(l) if l.trim().is_empty() => {}
            Ok(l) => match decode_event(&l, i + 1) {
                Ok(e) => events.push(e),
                Err(e) => errors.push(e),
            },
            Err(e) => errors.push(e.into()),
        }
    }
    (events, errors)
}
