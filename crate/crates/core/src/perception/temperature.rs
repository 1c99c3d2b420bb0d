use serde::{Deserialize, Serialize};

use crate::plant::ThermalFrame;

/// Measurement range of the far-infrared array, °C.
pub const SENSOR_RANGE: (f64, f64) = (-40.0, 300.0);

/// A frame whose cells all lie within this band, near ambient, shows no pan.
const UNIFORM_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanTemperatureReading {
    pub celsius: f64,
    /// False when the frame looks like an empty hob or is unusable.
    pub valid: bool,
    pub timestamp: f64,
}

/// Mean of the hottest decile of cells.
///
/// `celsius` is still reported for a no-pan frame (it is then simply the
/// ambient reading) because a cold pan is thermally indistinguishable from
/// an empty hob; only malformed frames yield NaN.
pub fn extract_pan_temperature(frame: &ThermalFrame, ambient: f64) -> PanTemperatureReading {
    let invalid = PanTemperatureReading {
        celsius: f64::NAN,
        valid: false,
        timestamp: frame.timestamp,
    };
    if !frame.is_well_formed() {
        return invalid;
    }
    let mut cells: Vec<f64> = frame.cells().collect();
    if cells.iter().any(|c| !c.is_finite()) {
        return invalid;
    }
    let n = cells.len();
    let k = n.div_ceil(10);
    cells.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    let celsius = cells[..k].iter().sum::<f64>() / k as f64;

    let (lo, hi) = cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let empty_hob = hi - lo <= UNIFORM_BAND && (celsius - ambient).abs() <= UNIFORM_BAND;
    let in_range = (SENSOR_RANGE.0..=SENSOR_RANGE.1).contains(&celsius);
    PanTemperatureReading {
        celsius,
        valid: !empty_hob && in_range,
        timestamp: frame.timestamp,
    }
}
