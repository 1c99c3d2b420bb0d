use std::collections::VecDeque;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use serde_json::Value;

use super::LabeledFrameRecord;

/// Where captured frames end up.
pub trait RecordSink: Send {
    fn write(&mut self, record: &LabeledFrameRecord, frame: &Value) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// `<root>/sessions/<id>/frames/<seq>.json` plus an append-only
/// `records.jsonl` per session.
#[derive(Debug, Clone)]
pub struct DirectorySink {
    root: PathBuf,
}

impl DirectorySink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirectorySink { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn frame_path(session_id: &str, seq: u64) -> String {
        format!("sessions/{session_id}/frames/{seq:06}.json")
    }
}

impl RecordSink for DirectorySink {
    fn write(&mut self, record: &LabeledFrameRecord, frame: &Value) -> io::Result<()> {
        let frame_file = self.root.join(&record.frame_path);
        if let Some(dir) = frame_file.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&frame_file, serde_json::to_vec(frame)?)?;
        let session_dir = self.root.join("sessions").join(&record.session_id);
        let mut records = OpenOptions::new()
            .create(true)
            .append(true)
            .open(session_dir.join("records.jsonl"))?;
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        records.write_all(&line)
    }
}

enum Msg {
    Write(Box<LabeledFrameRecord>, Value),
    Flush(mpsc::Sender<()>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriterStatus {
    pub written: u64,
    pub pending: u64,
    pub consecutive_failures: u64,
    pub degraded: bool,
}

#[derive(Default)]
struct Shared {
    written: AtomicU64,
    pending: AtomicU64,
    failures: AtomicU64,
    degraded: AtomicBool,
}

/// Persists records on a background thread in submission order. Failed
/// writes stay at the head of the queue and are retried with the next
/// submission or flush.
pub struct QueuedWriter {
    tx: Option<mpsc::Sender<Msg>>,
    handle: Option<thread::JoinHandle<()>>,
    shared: Arc<Shared>,
}

impl QueuedWriter {
    pub fn spawn(mut sink: Box<dyn RecordSink>, degrade_after: u64) -> Self {
        let (tx, rx) = mpsc::channel::<Msg>();
        let shared = Arc::new(Shared::default());
        let state = Arc::clone(&shared);
        let handle = thread::Builder::new()
            .name("capture-writer".into())
            .spawn(move || {
                let mut queue: VecDeque<(Box<LabeledFrameRecord>, Value)> = VecDeque::new();
                let mut drain = |queue: &mut VecDeque<(Box<LabeledFrameRecord>, Value)>| {
                    while let Some((record, frame)) = queue.front() {
                        match sink.write(record, frame) {
                            Ok(()) => {
                                queue.pop_front();
                                state.written.fetch_add(1, Ordering::SeqCst);
                                state.pending.fetch_sub(1, Ordering::SeqCst);
                                state.failures.store(0, Ordering::SeqCst);
                            }
                            Err(e) => {
                                let n = state.failures.fetch_add(1, Ordering::SeqCst) + 1;
                                log::warn!("capture write failed ({n} in a row): {e}");
                                if n >= degrade_after {
                                    state.degraded.store(true, Ordering::SeqCst);
                                }
                                break;
                            }
                        }
                    }
                    let _ = sink.flush();
                };
                for msg in rx {
                    match msg {
                        Msg::Write(record, frame) => {
                            queue.push_back((record, frame));
                            drain(&mut queue);
                        }
                        Msg::Flush(ack) => {
                            drain(&mut queue);
                            let _ = ack.send(());
                        }
                    }
                }
                drain(&mut queue);
            })
            .expect("spawn capture writer");
        QueuedWriter {
            tx: Some(tx),
            handle: Some(handle),
            shared,
        }
    }

    pub fn submit(&self, record: LabeledFrameRecord, frame: Value) {
        self.shared.pending.fetch_add(1, Ordering::SeqCst);
        if let Some(tx) = &self.tx {
            let _ = tx.send(Msg::Write(Box::new(record), frame));
        }
    }

    /// Block until the writer has attempted everything submitted so far.
    pub fn flush(&self) {
        if let Some(tx) = &self.tx {
            let (ack_tx, ack_rx) = mpsc::channel();
            if tx.send(Msg::Flush(ack_tx)).is_ok() {
                let _ = ack_rx.recv();
            }
        }
    }

    pub fn status(&self) -> WriterStatus {
        WriterStatus {
            written: self.shared.written.load(Ordering::SeqCst),
            pending: self.shared.pending.load(Ordering::SeqCst),
            consecutive_failures: self.shared.failures.load(Ordering::SeqCst),
            degraded: self.shared.degraded.load(Ordering::SeqCst),
        }
    }

    /// Drain and stop the writer thread.
    pub fn close(mut self) -> WriterStatus {
        self.shutdown();
        self.status()
    }

    fn shutdown(&mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for QueuedWriter {
    fn drop(&mut self) {
        self.shutdown();
    }
}
