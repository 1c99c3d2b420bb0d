use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCategory {
    Transition,
    Action,
    Warning,
    Override,
    Fault,
    Command,
}

impl LogCategory {
    pub const ALL: [LogCategory; 6] = [
        LogCategory::Transition,
        LogCategory::Action,
        LogCategory::Warning,
        LogCategory::Override,
        LogCategory::Fault,
        LogCategory::Command,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LogCategory::Transition => "transition",
            LogCategory::Action => "action",
            LogCategory::Warning => "warning",
            LogCategory::Override => "override",
            LogCategory::Fault => "fault",
            LogCategory::Command => "command",
        }
    }
}

impl fmt::Display for LogCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LogCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown log category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub seq: u64,
    /// Simulation seconds.
    pub timestamp: f64,
    pub category: LogCategory,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogQuery {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub categories: Option<Vec<LogCategory>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    seq: u64,
    offset: u64,
    timestamp: f64,
}

struct Storage {
    path: PathBuf,
    file: File,
    index: File,
    offset: u64,
}

/// Append-only event log. Entries live in memory for queries and, when
/// backed by a file, are also appended there as JSON lines with a sparse
/// offset index written every `checkpoint_every` entries.
pub struct EventLog {
    entries: Vec<EventLogEntry>,
    storage: Option<Storage>,
    checkpoint_every: u64,
    /// Timestamp offset so a reopened log keeps increasing across runs.
    base: f64,
    degraded: bool,
    faults: u64,
}

pub type SharedLog = Arc<RwLock<EventLog>>;

impl Default for EventLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl EventLog {
    pub fn in_memory() -> Self {
        EventLog {
            entries: Vec::new(),
            storage: None,
            checkpoint_every: 256,
            base: 0.0,
            degraded: false,
            faults: 0,
        }
    }

    pub fn shared(self) -> SharedLog {
        Arc::new(RwLock::new(self))
    }

    /// Open (or create) a file-backed log, replaying what is already there.
    /// A torn final line from a crash is skipped and counted as a fault.
    pub fn open(path: &Path, checkpoint_every: u64) -> io::Result<Self> {
        let mut log = EventLog::in_memory();
        log.checkpoint_every = checkpoint_every.max(1);
        let mut torn_tail = false;
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            torn_tail = !text.is_empty() && !text.ends_with('\n');
            for line in text.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<EventLogEntry>(line) {
                    Ok(e) => log.entries.push(e),
                    Err(_) => log.faults += 1,
                }
            }
        }
        log.base = log.entries.last().map_or(0.0, |e| e.timestamp);
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if torn_tail {
            file.write_all(b"\n")?;
        }
        let offset = file.metadata()?.len();
        let index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(index_path(path))?;
        log.storage = Some(Storage {
            path: path.to_path_buf(),
            file,
            index,
            offset,
        });
        Ok(log)
    }

    pub fn path(&self) -> Option<&Path> {
        self.storage.as_ref().map(|s| s.path.as_path())
    }

    /// Append one entry. Timestamps never go backwards: an earlier time is
    /// raised to the latest one already logged.
    pub fn append(&mut self, timestamp: f64, category: LogCategory, payload: Value) -> &EventLogEntry {
        let last = self.entries.last().map_or(f64::NEG_INFINITY, |e| e.timestamp);
        let entry = EventLogEntry {
            seq: self.entries.len() as u64,
            timestamp: (self.base + timestamp).max(last),
            category,
            payload,
        };
        if let Some(storage) = &mut self.storage {
            if let Err(e) = write_entry(storage, &entry, self.checkpoint_every) {
                if !self.degraded {
                    log::error!("event log write failed, continuing in memory: {e}");
                }
                self.degraded = true;
                self.faults += 1;
            }
        }
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }

    pub fn entries(&self) -> &[EventLogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with `from <= timestamp <= to` in the given categories, in
    /// log order.
    pub fn query(&self, q: &LogQuery) -> Vec<EventLogEntry> {
        let start = q
            .from
            .map_or(0, |from| self.entries.partition_point(|e| e.timestamp < from));
        let end = q.to.map_or(self.entries.len(), |to| {
            self.entries.partition_point(|e| e.timestamp <= to)
        });
        if start >= end {
            return Vec::new();
        }
        self.entries[start..end]
            .iter()
            .filter(|e| q.categories.as_ref().is_none_or(|c| c.contains(&e.category)))
            .cloned()
            .collect()
    }

    pub fn count(&self, category: LogCategory) -> usize {
        self.entries.iter().filter(|e| e.category == category).count()
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn faults(&self) -> u64 {
        self.faults
    }

    pub fn flush(&mut self) {
        if let Some(s) = &mut self.storage {
            if s.file.sync_data().is_err() {
                self.degraded = true;
                self.faults += 1;
            }
        }
    }

    /// The log as JSON lines, exactly as persisted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

fn index_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".idx");
    path.with_file_name(name)
}

fn write_entry(storage: &mut Storage, entry: &EventLogEntry, every: u64) -> io::Result<()> {
    let mut line = serde_json::to_vec(entry)?;
    line.push(b'\n');
    if entry.seq.is_multiple_of(every) {
        let cp = Checkpoint {
            seq: entry.seq,
            offset: storage.offset,
            timestamp: entry.timestamp,
        };
        let mut cp_line = serde_json::to_vec(&cp)?;
        cp_line.push(b'\n');
        storage.index.write_all(&cp_line)?;
    }
    storage.file.write_all(&line)?;
    storage.offset += line.len() as u64;
    Ok(())
}
