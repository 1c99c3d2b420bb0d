use serde::{Deserialize, Serialize};

use crate::perception::ConfidenceVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthStatus {
    Ok,
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: HealthStatus,
    pub log_degraded: bool,
    pub capture_degraded: bool,
    pub perception_faults: u64,
    pub sensor_faults: u64,
    /// Set by the service when the control loop has not published recently.
    pub stale: bool,
}

/// State of the whole system after one control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySnapshot {
    pub tick: u64,
    /// Simulation seconds at the end of the tick.
    pub time: f64,
    /// Temperature as perceived from the thermal frame.
    pub pan_temp: f64,
    pub pan_temp_valid: bool,
    pub setpoint: Option<f64>,
    /// Delivered power fraction after the safety gate.
    pub power: f64,
    pub commanded_power: f64,
    pub power_scale: f64,
    pub servo_angle: f64,
    pub heat_enabled: bool,
    pub stopped: bool,
    pub pan_present: bool,
    /// Current recipe state id, or `idle` when no recipe is running.
    pub engine_state: String,
    pub recipe_id: Option<String>,
    pub recipe_complete: bool,
    pub display_text: String,
    pub active_warnings: Vec<Warning>,
    pub timers: std::collections::BTreeMap<String, f64>,
    pub last_milestone: Option<String>,
    pub latest_confidences: Option<ConfidenceVector>,
    pub session: Option<String>,
    pub session_label: Option<String>,
    pub session_records: u64,
    pub health: Health,
}
