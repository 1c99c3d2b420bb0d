use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ConfidenceVector;
use crate::plant::{ground_truth_confidences, PlantState};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("simulated classifier: {0}")]
    Simulated(String),
    #[error("replay file {path}: {reason}")]
    Replay { path: String, reason: String },
    #[error("remote classifier: {0}")]
    Remote(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Simulated,
    Replay,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Simulated {
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    Replay {
        path: PathBuf,
    },
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_noise() -> f64 {
    0.2
}

fn default_timeout_ms() -> u64 {
    1000
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Simulated {
            noise: default_noise(),
            seed: 0,
        }
    }
}

/// What the classifier gets to look at on one perception tick.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub time: f64,
    /// Ground truth, used only by the simulated backend.
    pub plant: Option<&'a PlantState>,
    /// Path of the persisted frame, when one exists.
    pub frame_ref: Option<&'a str>,
}

pub trait Classifier: Send {
    fn kind(&self) -> BackendKind;

    /// `Ok(None)` means the backend has nothing more to say (end of a replay).
    fn classify(&mut self, obs: &Observation<'_>) -> Result<Option<ConfidenceVector>, ClassifyError>;
}

pub fn build_backend(
    config: &BackendConfig,
    vocabulary: &[String],
) -> Result<Box<dyn Classifier>, ClassifyError> {
    Ok(match config {
        BackendConfig::Simulated { noise, seed } => {
            Box::new(SimulatedBackend::new(vocabulary.to_vec(), *noise, *seed))
        }
        BackendConfig::Replay { path } => Box::new(ReplayBackend::from_file(path)?),
        BackendConfig::Remote {
            endpoint,
            timeout_ms,
        } => Box::new(RemoteBackend::new(
            endpoint.clone(),
            Duration::from_millis(*timeout_ms),
            vocabulary.to_vec(),
        )),
    })
}

/// Delegates to the plant's ground truth.
pub struct SimulatedBackend {
    vocabulary: Vec<String>,
    noise: f64,
    rng: ChaCha8Rng,
}

impl SimulatedBackend {
    pub fn new(vocabulary: Vec<String>, noise: f64, seed: u64) -> Self {
        Self {
            vocabulary,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Classifier for SimulatedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Simulated
    }

    fn classify(&mut self, obs: &Observation<'_>) -> Result<Option<ConfidenceVector>, ClassifyError> {
        let plant = obs
            .plant
            .ok_or_else(|| ClassifyError::Simulated("no plant state supplied".into()))?;
        let mut conf = ground_truth_confidences(plant, &self.vocabulary, self.noise, &mut self.rng)
            .map_err(|e| ClassifyError::Simulated(e.to_string()))?;
        conf.timestamp = obs.time;
        Ok(Some(conf))
    }
}

/// Plays back a recorded session, one vector per call.
pub struct ReplayBackend {
    records: VecDeque<ConfidenceVector>,
}

impl ReplayBackend {
    pub fn new(records: impl IntoIterator<Item = ConfidenceVector>) -> Self {
        Self {
            records: records.into_iter().collect(),
        }
    }

    /// Reads newline-delimited `{"t": .., "scores": {..}}` records.
    pub fn from_file(path: &Path) -> Result<Self, ClassifyError> {
        let err = |reason: String| ClassifyError::Replay {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut records = VecDeque::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ConfidenceVector =
                serde_json::from_str(line).map_err(|e| err(format!("line {}: {e}", n + 1)))?;
            records.push_back(rec);
        }
        Ok(Self { records })
    }

    pub fn remaining(&self) -> usize {
        self.records.len()
    }
}

impl Classifier for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn classify(&mut self, _obs: &Observation<'_>) -> Result<Option<ConfidenceVector>, ClassifyError> {
        Ok(self.records.pop_front())
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    t: f64,
    frame_ref: Option<&'a str>,
    vocabulary: &'a [String],
}

#[derive(Deserialize)]
struct RemoteResponse {
    scores: BTreeMap<String, f64>,
}

/// JSON request/response to an inference service.
pub struct RemoteBackend {
    endpoint: String,
    vocabulary: Vec<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(endpoint: String, timeout: Duration, vocabulary: Vec<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            endpoint,
            vocabulary,
            agent,
        }
    }
}

impl Classifier for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn classify(&mut self, obs: &Observation<'_>) -> Result<Option<ConfidenceVector>, ClassifyError> {
        let request = RemoteRequest {
            t: obs.time,
            frame_ref: obs.frame_ref,
            vocabulary: &self.vocabulary,
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&request)
            .map_err(|e| ClassifyError::Remote(e.to_string()))?;
        let body: RemoteResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ClassifyError::Remote(format!("malformed response: {e}")))?;
        Ok(Some(ConfidenceVector {
            timestamp: obs.time,
            scores: body.scores,
        }))
    }
}
