// SPDX-License-Identifier: Apache-2.0

//! Append-only JSONL event log.
//!
//! One record per line: `{"seq": 1, "kind": "...", "payload": {...},
//! "timestamp": <ms>}`. Sequence numbers start at 1 and increase by one.
//! Snapshots are always derived by replay, never stored.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::game::{GameConfig, GameEvent, GameState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: GameEvent,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

/// Receives records before they are applied. A failing append leaves the
/// game state untouched.
pub trait EventSink: Send {
    fn append(&mut self, record: &EventRecord) -> Result<()>;

    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// In-memory sink, shareable so tests can inspect what was written.
#[derive(Debug, Clone, Default)]
pub struct MemorySink(pub Arc<Mutex<Vec<EventRecord>>>);

impl MemorySink {
    pub fn records(&self) -> Vec<EventRecord> {
        self.0.lock().unwrap().clone()
    }
}

impl EventSink for MemorySink {
    fn append(&mut self, record: &EventRecord) -> Result<()> {
        self.0.lock().unwrap().push(record.clone());
        Ok(())
    }
}

/// File-backed log writer.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    writer: BufWriter<File>,
    last_seq: u64,
    sync: bool,
}

impl EventLog {
    /// Opens (or creates) a log for appending. Existing content is validated
    /// and returned so the caller can replay it.
    pub fn open(path: impl AsRef<Path>) -> Result<(EventLog, Vec<EventRecord>)> {
        let path = path.as_ref().to_path_buf();
        let records = if path.exists() { read_log(&path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let last_seq = records.last().map(|r| r.seq).unwrap_or(0);
        Ok((
            EventLog {
                path,
                writer: BufWriter::new(file),
                last_seq,
                sync: true,
            },
            records,
        ))
    }

    /// Whether each append is followed by `fsync`. On by default.
    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }
}

impl EventSink for EventLog {
    fn append(&mut self, record: &EventRecord) -> Result<()> {
        if record.seq != self.last_seq + 1 {
            return Err(Error::LogGap {
                expected: self.last_seq + 1,
                found: record.seq,
            });
        }
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.writer.write_all(&line)?;
        self.writer.flush()?;
        if self.sync {
            self.writer.get_ref().sync_data()?;
        }
        self.last_seq = record.seq;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        self.writer.get_ref().sync_data()?;
        Ok(())
    }
}

/// Parses a log, checking that sequence numbers are gap-free from 1.
pub fn parse_log<R: BufRead>(reader: R) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    let mut expected = 1u64;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| Error::LogCorrupt {
            seq: expected,
            line: n + 1,
            message: e.to_string(),
        })?;
        if record.seq != expected {
            return Err(Error::LogGap {
                expected,
                found: record.seq,
            });
        }
        expected += 1;
        out.push(record);
    }
    Ok(out)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    parse_log(BufReader::new(File::open(path)?))
}

/// Rebuilds the game state from a gap-free record sequence.
pub fn replay<'a>(records: impl IntoIterator<Item = &'a EventRecord>, config: &GameConfig) -> Result<GameState> {
    let mut state = GameState::default();
    for r in records {
        state.apply(config, r)?;
    }
    Ok(state)
}
