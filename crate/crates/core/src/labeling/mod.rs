//! Capture sessions, class balancing and manifest export for the
//! milestone dataset.

mod balance;
mod manifest;
mod session;
mod sink;
mod stats;

pub use balance::{balance_dataset, BalanceOutcome, BalancePolicy, BalanceReport};
pub use manifest::{export_manifest, parse_manifest, render_manifest, DatasetManifest};
pub use session::{load_corpus, load_session_records, CaptureConfig, CaptureSession, SessionSummary};
pub use sink::{DirectorySink, QueuedWriter, RecordSink, WriterStatus};
pub use stats::{session_stats, SessionStats, DURATION_BUCKETS};

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label given to frames captured while no label is active.
pub const UNLABELED: &str = "unlabeled";

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error("label `{0}` is not in the recipe vocabulary")]
    UnknownLabel(String),
    #[error("no capture session is active")]
    NoSession,
    #[error("a capture session is already active: {0}")]
    SessionActive(String),
    #[error("invalid balancing policy: {0}")]
    Policy(String),
    #[error("cannot balance, labels without records: {missing:?} (counts {counts:?})")]
    MissingLabels {
        missing: Vec<String>,
        counts: BTreeMap<String, usize>,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("duplicate frame path `{0}`")]
    DuplicatePath(String),
    #[error("malformed manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("malformed record: {0}")]
    Record(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub pan_temp: f64,
    pub power: f64,
    pub engine_state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrective_input: Option<String>,
}

/// One captured frame. `frame_path` is relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrameRecord {
    pub session_id: String,
    pub seq: u64,
    pub frame_path: String,
    pub label: String,
    pub timestamp: f64,
    pub metadata: RecordMetadata,
}
