use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{ConfidenceVector, MilestoneEvent, PerceptionError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Frames in the rolling window.
    pub window_len: usize,
    /// Absolute mean-confidence threshold.
    pub threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            window_len: 4,
            threshold: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.window_len == 0 {
            return Err(PerceptionError::Config("window_len must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(PerceptionError::Config("threshold must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-label rolling mean of classifier confidence.
///
/// The window restarts whenever the frame's dominant label changes, so a
/// clean step needs `window_len` consecutive frames before it can fire. A
/// label fires when its own window mean reaches the threshold and it is not
/// already the current label.
#[derive(Debug, Clone)]
pub struct RollingFilter {
    config: FilterConfig,
    buffers: BTreeMap<String, VecDeque<f64>>,
    dominant: Option<String>,
    current_label: Option<String>,
}

impl RollingFilter {
    pub fn new(config: FilterConfig, vocabulary: &[String]) -> Result<Self, PerceptionError> {
        config.validate()?;
        if vocabulary.is_empty() {
            return Err(PerceptionError::Vocabulary("empty vocabulary".into()));
        }
        let buffers = vocabulary
            .iter()
            .map(|l| (l.clone(), VecDeque::with_capacity(config.window_len)))
            .collect::<BTreeMap<_, _>>();
        if buffers.len() != vocabulary.len() {
            return Err(PerceptionError::Vocabulary("duplicate labels".into()));
        }
        Ok(Self {
            config,
            buffers,
            dominant: None,
            current_label: None,
        })
    }

    pub fn config(&self) -> FilterConfig {
        self.config
    }

    pub fn current_label(&self) -> Option<&str> {
        self.current_label.as_deref()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &String> {
        self.buffers.keys()
    }

    /// Frames currently held per label (all buffers fill together).
    pub fn fill(&self) -> usize {
        self.buffers.values().next().map_or(0, VecDeque::len)
    }

    pub fn mean(&self, label: &str) -> Option<f64> {
        let buf = self.buffers.get(label)?;
        if buf.is_empty() {
            return None;
        }
        Some(buf.iter().sum::<f64>() / buf.len() as f64)
    }

    fn check(&self, conf: &ConfidenceVector) -> Result<(), PerceptionError> {
        if conf.scores.len() != self.buffers.len()
            || !conf.scores.keys().all(|l| self.buffers.contains_key(l))
        {
            let got: Vec<&String> = conf.scores.keys().collect();
            return Err(PerceptionError::Vocabulary(format!("frame labels {got:?}")));
        }
        for (label, &score) in &conf.scores {
            if !(0.0..=1.0).contains(&score) {
                return Err(PerceptionError::Score {
                    label: label.clone(),
                    score,
                });
            }
        }
        Ok(())
    }

    pub fn update(
        &mut self,
        conf: &ConfidenceVector,
    ) -> Result<Option<MilestoneEvent>, PerceptionError> {
        self.check(conf)?;
        let dominant = conf.dominant().map(str::to_string);
        if dominant != self.dominant {
            for buf in self.buffers.values_mut() {
                buf.clear();
            }
            self.dominant = dominant;
        }
        let window = self.config.window_len;
        for (label, buf) in self.buffers.iter_mut() {
            if buf.len() == window {
                buf.pop_front();
            }
            buf.push_back(conf.scores[label]);
        }
        if self.fill() < window {
            return Ok(None);
        }

        let mut best: Option<(&String, f64)> = None;
        for (label, buf) in &self.buffers {
            if self.current_label.as_ref() == Some(label) {
                continue;
            }
            let mean = buf.iter().sum::<f64>() / window as f64;
            if mean >= self.config.threshold && best.is_none_or(|(_, m)| mean > m) {
                best = Some((label, mean));
            }
        }
        Ok(best.map(|(label, mean)| {
            let event = MilestoneEvent {
                label: label.clone(),
                timestamp: conf.timestamp,
                mean_confidence: mean,
            };
            self.current_label = Some(label.clone());
            event
        }))
    }
}
