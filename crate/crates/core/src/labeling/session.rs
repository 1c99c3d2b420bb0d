use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sink::{DirectorySink, QueuedWriter, RecordSink, WriterStatus};
use super::{LabeledFrameRecord, LabelingError, RecordMetadata, UNLABELED};

const CADENCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptureConfig {
    pub cadence: f64,
    pub degrade_after: u64,
    pub root: PathBuf,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig {
            cadence: 0.5,
            degrade_after: 10,
            root: PathBuf::from("data"),
        }
    }
}

impl CaptureConfig {
    pub fn validate(&self) -> Result<(), LabelingError> {
        if !(self.cadence.is_finite() && self.cadence > 0.0) {
            return Err(LabelingError::Config(format!(
                "cadence must be > 0, got {}",
                self.cadence
            )));
        }
        if self.degrade_after == 0 {
            return Err(LabelingError::Config("degrade_after must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub recipe_id: String,
    pub records: u64,
    pub counts: BTreeMap<String, usize>,
    pub degraded: bool,
    pub unwritten: u64,
}

/// A live capture: one record every `cadence` seconds of sim time, tagged
/// with whatever label is active at that moment.
pub struct CaptureSession {
    session_id: String,
    recipe_id: String,
    started_at: f64,
    cadence: f64,
    vocabulary: Vec<String>,
    active_label: String,
    seq: u64,
    pending_correction: Option<String>,
    counts: BTreeMap<String, usize>,
    writer: QueuedWriter,
}

impl CaptureSession {
    pub fn start(
        session_id: &str,
        recipe_id: &str,
        vocabulary: &[String],
        started_at: f64,
        config: &CaptureConfig,
        sink: Box<dyn RecordSink>,
    ) -> Result<Self, LabelingError> {
        config.validate()?;
        if session_id.is_empty()
            || !session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(LabelingError::Config(format!(
                "session id `{session_id}` must be non-empty [A-Za-z0-9_-]"
            )));
        }
        Ok(CaptureSession {
            session_id: session_id.into(),
            recipe_id: recipe_id.into(),
            started_at,
            cadence: config.cadence,
            vocabulary: vocabulary.to_vec(),
            active_label: UNLABELED.into(),
            seq: 0,
            pending_correction: None,
            counts: BTreeMap::new(),
            writer: QueuedWriter::spawn(sink, config.degrade_after),
        })
    }

    /// Start a session persisting into `config.root`.
    pub fn start_in_directory(
        session_id: &str,
        recipe_id: &str,
        vocabulary: &[String],
        started_at: f64,
        config: &CaptureConfig,
    ) -> Result<Self, LabelingError> {
        let sink = DirectorySink::new(&config.root);
        Self::start(session_id, recipe_id, vocabulary, started_at, config, Box::new(sink))
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn recipe_id(&self) -> &str {
        &self.recipe_id
    }

    pub fn active_label(&self) -> &str {
        &self.active_label
    }

    pub fn records(&self) -> u64 {
        self.seq
    }

    pub fn set_label(&mut self, label: &str) -> Result<(), LabelingError> {
        if label != UNLABELED && !self.vocabulary.iter().any(|l| l == label) {
            return Err(LabelingError::UnknownLabel(label.into()));
        }
        self.active_label = label.into();
        Ok(())
    }

    /// Attach a human correction (skip, cancel...) to the next record.
    pub fn note_correction(&mut self, text: &str) {
        match &mut self.pending_correction {
            Some(existing) => {
                existing.push_str("; ");
                existing.push_str(text);
            }
            None => self.pending_correction = Some(text.into()),
        }
    }

    pub fn next_due(&self) -> f64 {
        self.started_at + (self.seq + 1) as f64 * self.cadence
    }

    pub fn due(&self, time: f64) -> bool {
        time + CADENCE_EPS >= self.next_due()
    }

    /// Record one frame. Persistence happens on the writer thread.
    pub fn capture_tick(&mut self, frame: Value, mut metadata: RecordMetadata) -> LabeledFrameRecord {
        let timestamp = self.next_due();
        metadata.corrective_input = self.pending_correction.take();
        let record = LabeledFrameRecord {
            session_id: self.session_id.clone(),
            seq: self.seq,
            frame_path: DirectorySink::frame_path(&self.session_id, self.seq),
            label: self.active_label.clone(),
            timestamp,
            metadata,
        };
        self.seq += 1;
        *self.counts.entry(record.label.clone()).or_default() += 1;
        self.writer.submit(record.clone(), frame);
        record
    }

    pub fn writer_status(&self) -> WriterStatus {
        self.writer.status()
    }

    pub fn flush(&self) {
        self.writer.flush();
    }

    pub fn stop(self) -> SessionSummary {
        let status = self.writer.close();
        SessionSummary {
            session_id: self.session_id,
            recipe_id: self.recipe_id,
            records: self.seq,
            counts: self.counts,
            degraded: status.degraded,
            unwritten: status.pending,
        }
    }
}

/// Records of one session, in capture order.
pub fn load_session_records(
    root: &Path,
    session_id: &str,
) -> Result<Vec<LabeledFrameRecord>, LabelingError> {
    let path = root.join("sessions").join(session_id).join("records.jsonl");
    let text = fs::read_to_string(&path)?;
    let mut records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| LabelingError::Record(e.to_string())))
        .collect::<Result<Vec<LabeledFrameRecord>, _>>()?;
    records.sort_by_key(|r| r.seq);
    Ok(records)
}

/// Every record under `root/sessions`, ordered by session id then sequence.
pub fn load_corpus(root: &Path) -> Result<Vec<LabeledFrameRecord>, LabelingError> {
    let sessions = root.join("sessions");
    if !sessions.is_dir() {
        return Ok(Vec::new());
    }
    let mut ids: Vec<String> = fs::read_dir(&sessions)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("records.jsonl").is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    ids.sort();
    let mut all = Vec::new();
    for id in ids {
        all.extend(load_session_records(root, &id)?);
    }
    Ok(all)
}
