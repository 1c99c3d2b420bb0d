//! Runtime configuration: TOML file, then `SOUSCHEF__SECTION__KEY`
//! environment overrides, then built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{Calibration, PidGains};
use crate::labeling::CaptureConfig;
use crate::perception::{BackendConfig, FilterConfig};
use crate::plant::PlantConfig;
use crate::recipe::EngineConfig;

pub const ENV_PREFIX: &str = "SOUSCHEF__";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Snapshots per second pushed on the telemetry stream.
    pub stream_hz: f64,
    /// Seconds without a completed tick before health reports degraded.
    pub stale_after: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            stream_hz: 5.0,
            stale_after: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    pub tick_hz: f64,
    #[serde(flatten)]
    pub gains: PidGains,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            tick_hz: 10.0,
            gains: PidGains::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServoConfig {
    pub slew_rate: f64,
    pub feedback_noise: f64,
    pub calibration: Calibration,
    pub seed: u64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        ServoConfig {
            slew_rate: 180.0,
            feedback_noise: 0.0,
            calibration: Calibration::default(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    pub rate_hz: f64,
    #[serde(flatten)]
    pub filter: FilterConfig,
    pub backend: BackendConfig,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            rate_hz: 2.0,
            filter: FilterConfig::default(),
            backend: BackendConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Sim seconds per wall second when serving; ignored by headless runs.
    pub speedup: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { speedup: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogConfig {
    /// Event log file; in-memory only when unset.
    pub path: Option<PathBuf>,
    /// Entries between index checkpoints.
    pub checkpoint_every: u64,
}

impl Default for LogConfig {
    fn default() -> Self {
        LogConfig {
            path: None,
            checkpoint_every: 256,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub service: ServiceConfig,
    pub control: ControlConfig,
    pub servo: ServoConfig,
    pub plant: PlantConfig,
    pub perception: PerceptionConfig,
    pub labeling: CaptureConfig,
    pub engine: EngineConfig,
    pub sim: SimConfig,
    pub log: LogConfig,
}

impl Config {
    /// File (if any) plus overrides from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(
        path: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        overrides.sort();
        for (key, raw) in overrides {
            let path: Vec<String> = key[ENV_PREFIX.len()..]
                .split("__")
                .map(|s| s.to_ascii_lowercase())
                .collect();
            set_path(&mut table, &path, parse_value(&raw))
                .map_err(|e| ConfigError::Parse(format!("{key}: {e}")))?;
        }
        let config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    // Negated comparisons so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        if !(self.control.tick_hz.is_finite() && self.control.tick_hz > 0.0) {
            return Err(invalid("control.tick_hz must be > 0".into()));
        }
        let ratio = self.control.tick_hz / self.perception.rate_hz;
        if !(self.perception.rate_hz > 0.0 && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9)
        {
            return Err(invalid(
                "perception.rate_hz must divide control.tick_hz".into(),
            ));
        }
        self.control.gains.validate().map_err(|e| invalid(e.to_string()))?;
        self.plant.validate().map_err(|e| invalid(e.to_string()))?;
        self.perception.filter.validate().map_err(|e| invalid(e.to_string()))?;
        self.labeling.validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.servo.slew_rate.is_finite() && self.servo.slew_rate > 0.0) {
            return Err(invalid("servo.slew_rate must be > 0".into()));
        }
        if !(self.servo.feedback_noise >= 0.0) {
            return Err(invalid("servo.feedback_noise must be >= 0".into()));
        }
        if !(self.sim.speedup.is_finite() && self.sim.speedup > 0.0) {
            return Err(invalid("sim.speedup must be > 0".into()));
        }
        if !(self.service.stream_hz > 0.0) {
            return Err(invalid("service.stream_hz must be > 0".into()));
        }
        if self.log.checkpoint_every == 0 {
            return Err(invalid("log.checkpoint_every must be >= 1".into()));
        }
        if !(self.engine.cancel_cooldown >= 0.0) {
            return Err(invalid("engine.cancel_cooldown must be >= 0".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), String> {
    match path {
        [] => Err("empty key".into()),
        [last] => {
            table.insert(last.clone(), value);
            Ok(())
        }
        [head, rest @ ..] => {
            let entry = table
                .entry(head.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => set_path(t, rest, value),
                _ => Err(format!("`{head}` is not a section")),
            }
        }
    }
}
