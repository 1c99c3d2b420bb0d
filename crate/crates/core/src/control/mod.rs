//! Closed-loop pan temperature control: PID → power fraction → hob knob servo,
//! behind a hardware-style safety gate.

mod pid;
mod safety;
mod servo;

pub use pid::{pid_step, PidGains, PidState, SensorFault};
pub use safety::{safety_gate, SafetyReason, SafetyState};
pub use servo::{angle_to_power, power_to_angle, servo_step, Calibration, ServoModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("power fraction {0} out of range [0, 1]")]
    PowerOutOfRange(f64),
    #[error("invalid gains: {0}")]
    Gains(String),
    #[error("invalid servo calibration: {0}")]
    Calibration(String),
}

/// Requested hob power as a fraction of rated power, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerCommand(f64);

impl PowerCommand {
    pub const OFF: PowerCommand = PowerCommand(0.0);
    pub const FULL: PowerCommand = PowerCommand(1.0);

    pub fn new(fraction: f64) -> Result<Self, ControlError> {
        if (0.0..=1.0).contains(&fraction) {
            Ok(Self(fraction))
        } else {
            Err(ControlError::PowerOutOfRange(fraction))
        }
    }

    /// Saturates into range; NaN maps to zero.
    pub fn saturating(fraction: f64) -> Self {
        if fraction.is_nan() {
            Self::OFF
        } else {
            Self(fraction.clamp(0.0, 1.0))
        }
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::saturating(self.0 * factor)
    }
}

impl TryFrom<f64> for PowerCommand {
    type Error = ControlError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PowerCommand> for f64 {
    fn from(value: PowerCommand) -> Self {
        value.0
    }
}
