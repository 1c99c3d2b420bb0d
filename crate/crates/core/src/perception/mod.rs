//! Observation → pan temperature and debounced milestone events.

mod backend;
mod filter;
mod temperature;

pub use backend::{
    build_backend, BackendConfig, BackendKind, Classifier, ClassifyError, Observation,
    RemoteBackend, ReplayBackend, SimulatedBackend,
};
pub use filter::{FilterConfig, RollingFilter};
pub use temperature::{extract_pan_temperature, PanTemperatureReading, SENSOR_RANGE};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("vocabulary mismatch: {0}")]
    Vocabulary(String),
    #[error("invalid filter configuration: {0}")]
    Config(String),
    #[error("score for `{label}` is {score}, outside [0, 1]")]
    Score { label: String, score: f64 },
}

/// Per-label classifier scores for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector {
    #[serde(rename = "t")]
    pub timestamp: f64,
    pub scores: BTreeMap<String, f64>,
}

impl ConfidenceVector {
    /// Label with the highest score; ties go to the lexicographically first.
    pub fn dominant(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (label, &score) in &self.scores {
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((label, score));
            }
        }
        best.map(|(l, _)| l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneEvent {
    pub label: String,
    pub timestamp: f64,
    pub mean_confidence: f64,
}

/// Classifier backend plus rolling filter, ticked at the perception cadence.
pub struct Perception {
    backend: Box<dyn Classifier>,
    filter: RollingFilter,
    faults: u64,
    latest: Option<ConfidenceVector>,
}

/// Result of one perception frame.
#[derive(Debug, Default)]
pub struct PerceptionFrame {
    pub confidences: Option<ConfidenceVector>,
    pub event: Option<MilestoneEvent>,
    pub fault: Option<String>,
    pub end_of_stream: bool,
}

impl Perception {
    pub fn new(backend: Box<dyn Classifier>, filter: RollingFilter) -> Self {
        Self {
            backend,
            filter,
            faults: 0,
            latest: None,
        }
    }

    pub fn observe(&mut self, obs: &Observation<'_>) -> PerceptionFrame {
        let mut frame = PerceptionFrame::default();
        match self.backend.classify(obs) {
            Ok(Some(conf)) => match self.filter.update(&conf) {
                Ok(event) => {
                    frame.event = event;
                    self.latest = Some(conf.clone());
                    frame.confidences = Some(conf);
                }
                Err(e) => {
                    self.faults += 1;
                    frame.fault = Some(e.to_string());
                }
            },
            Ok(None) => frame.end_of_stream = true,
            Err(e) => {
                self.faults += 1;
                frame.fault = Some(e.to_string());
            }
        }
        frame
    }

    pub fn faults(&self) -> u64 {
        self.faults
    }

    pub fn latest(&self) -> Option<&ConfidenceVector> {
        self.latest.as_ref()
    }

    pub fn filter(&self) -> &RollingFilter {
        &self.filter
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }
}
