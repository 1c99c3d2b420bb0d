use serde::{Deserialize, Serialize};

use super::{ControlError, PowerCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidGains {
    /// Power fraction per kelvin.
    pub kp: f64,
    /// Power fraction per kelvin-second.
    pub ki: f64,
    /// Power fraction per kelvin/second, applied to the measurement slope.
    pub kd: f64,
    pub output_min: f64,
    pub output_max: f64,
    /// Bound on |∫e dt|, kelvin-seconds.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.03,
            ki: 0.001,
            kd: 0.05,
            output_min: 0.0,
            output_max: 1.0,
            integral_limit: 1000.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let all = [self.kp, self.ki, self.kd, self.output_min, self.output_max, self.integral_limit];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Gains("non-finite value".into()));
        }
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return Err(ControlError::Gains("gains must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.output_min)
            || !(0.0..=1.0).contains(&self.output_max)
            || self.output_min >= self.output_max
        {
            return Err(ControlError::Gains("need 0 <= output_min < output_max <= 1".into()));
        }
        if self.integral_limit <= 0.0 {
            return Err(ControlError::Gains("integral_limit must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub setpoint: f64,
    pub integral: f64,
    pub last_error: f64,
    pub last_output: f64,
    /// Previous measurement, for the derivative term. `None` after a reset.
    pub last_measurement: Option<f64>,
}

impl PidState {
    pub fn new(setpoint: f64) -> Self {
        Self {
            setpoint,
            ..Self::default()
        }
    }

    /// Clears history but keeps the setpoint.
    pub fn reset(&mut self) {
        *self = Self::new(self.setpoint);
    }
}

/// Non-finite measurement. The controller keeps emitting `held`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFault {
    pub held: PowerCommand,
}

/// One PID update with conditional-integration anti-windup: the integral is
/// frozen whenever integrating would push an already saturated output
/// further into saturation. The derivative acts on the measurement so that
/// setpoint steps do not kick the output.
pub fn pid_step(
    state: &PidState,
    gains: &PidGains,
    measurement: f64,
    dt: f64,
) -> Result<(PidState, PowerCommand), SensorFault> {
    if !measurement.is_finite() || !dt.is_finite() || dt <= 0.0 {
        return Err(SensorFault {
            held: PowerCommand::saturating(state.last_output),
        });
    }
    let error = state.setpoint - measurement;
    let slope = state
        .last_measurement
        .map_or(0.0, |prev| (measurement - prev) / dt);
    let p = gains.kp * error;
    let d = -gains.kd * slope;

    let limit = gains.integral_limit;
    let integrated = (state.integral + error * dt).clamp(-limit, limit);
    let trial = p + gains.ki * integrated + d;
    let winding_up = (trial > gains.output_max && error > 0.0)
        || (trial < gains.output_min && error < 0.0);
    let integral = if winding_up {
        state.integral.clamp(-limit, limit)
    } else {
        integrated
    };
    let output = (p + gains.ki * integral + d).clamp(gains.output_min, gains.output_max);

    let next = PidState {
        setpoint: state.setpoint,
        integral,
        last_error: error,
        last_output: output,
        last_measurement: Some(measurement),
    };
    Ok((next, PowerCommand::saturating(output)))
}
