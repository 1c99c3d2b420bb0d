use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ControlError, PowerCommand};

/// Monotone (power fraction, knob angle) table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Calibration {
    points: Vec<(f64, f64)>,
}

impl Calibration {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ControlError> {
        if points.len() < 2 {
            return Err(ControlError::Calibration("need at least two points".into()));
        }
        if points.iter().any(|(f, a)| !f.is_finite() || !a.is_finite()) {
            return Err(ControlError::Calibration("non-finite entry".into()));
        }
        for pair in points.windows(2) {
            let ((f0, a0), (f1, a1)) = (pair[0], pair[1]);
            if f1 <= f0 {
                return Err(ControlError::Calibration(
                    "fractions must be strictly increasing".into(),
                ));
            }
            if a1 < a0 {
                return Err(ControlError::Calibration("angles must be non-decreasing".into()));
            }
        }
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        if first != 0.0 || last != 1.0 {
            return Err(ControlError::Calibration("table must span fractions 0..1".into()));
        }
        Ok(Self { points })
    }

    pub fn angle_min(&self) -> f64 {
        self.points[0].1
    }

    pub fn angle_max(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            points: vec![(0.0, 0.0), (1.0, 180.0)],
        }
    }
}

impl TryFrom<Vec<(f64, f64)>> for Calibration {
    type Error = ControlError;
    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<Calibration> for Vec<(f64, f64)> {
    fn from(c: Calibration) -> Self {
        c.points
    }
}

fn interpolate(x: f64, table: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let mut prev: Option<(f64, f64)> = None;
    for (x1, y1) in table.clone() {
        match prev {
            None if x <= x1 => return y1,
            Some((x0, y0)) if x <= x1 => {
                if x1 == x0 {
                    return y0;
                }
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
            _ => prev = Some((x1, y1)),
        }
    }
    prev.map_or(0.0, |(_, y)| y)
}

/// Piecewise-linear lookup of the knob angle for a power fraction.
pub fn power_to_angle(power: PowerCommand, calibration: &Calibration) -> f64 {
    interpolate(power.fraction(), calibration.points.iter().copied())
}

/// Inverse lookup: the power the hob delivers at a given knob angle. On flat
/// segments the lowest matching fraction wins.
pub fn angle_to_power(angle: f64, calibration: &Calibration) -> PowerCommand {
    let inverse = calibration.points.iter().map(|&(f, a)| (a, f));
    PowerCommand::saturating(interpolate(angle, inverse))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServoModel {
    pub angle: f64,
    pub target_angle: f64,
    /// Degrees per second.
    pub slew_rate: f64,
    /// Half-width of the uniform noise on the Hall-effect feedback.
    pub feedback_noise: f64,
    pub angle_min: f64,
    pub angle_max: f64,
}

impl Default for ServoModel {
    fn default() -> Self {
        Self {
            angle: 0.0,
            target_angle: 0.0,
            slew_rate: 180.0,
            feedback_noise: 0.0,
            angle_min: 0.0,
            angle_max: 180.0,
        }
    }
}

impl ServoModel {
    pub fn set_target(&mut self, angle: f64) {
        self.target_angle = angle.clamp(self.angle_min, self.angle_max);
    }

    /// Angle reported by the feedback sensor.
    pub fn feedback<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.feedback_noise > 0.0 {
            self.angle + rng.random_range(-self.feedback_noise..=self.feedback_noise)
        } else {
            self.angle
        }
    }
}

/// Moves the servo toward its target by at most `slew_rate · dt`.
pub fn servo_step(servo: &ServoModel, dt: f64) -> ServoModel {
    let mut next = servo.clone();
    let gap = servo.target_angle - servo.angle;
    let max_move = servo.slew_rate * dt.max(0.0);
    next.angle = if gap.abs() <= max_move {
        servo.target_angle
    } else {
        servo.angle + max_move.copysign(gap)
    };
    next.angle = next.angle.clamp(servo.angle_min, servo.angle_max);
    next
}
