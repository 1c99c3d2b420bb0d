//! Deterministic simulation of the induction hob, pan and pan contents.
//!
//! The plant is a single lumped thermal capacitance (pan plus water) heated
//! through an induction coupling and losing heat to ambient:
//!
//! ```text
//! dT/dt = (η·P − h·(T − T_amb)) / C,    C = C_pan + m_water · c_water
//! ```
//!
//! integrated with explicit Euler. While water is present the temperature is
//! clamped at the boiling point. Milestones are never emergent: the ground
//! truth label is injected by a [`SimScript`].

mod classifier;
mod script;
mod thermal;

pub use classifier::ground_truth_confidences;
pub use script::{apply_script, ScriptEntry, ScriptError, ScriptEvent, SimScript};
pub use thermal::{render_thermal, ThermalFrame, FRAME_COLS, FRAME_ROWS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::PowerCommand;

/// Specific heat of water, J/(kg·K).
pub const WATER_SPECIFIC_HEAT: f64 = 4186.0;

/// Label shown by the simulated classifier while a boilover is active.
pub const BOILOVER_LABEL: &str = "boilover";
/// Label shown by the simulated classifier while the chef is stirring.
pub const STIRRING_LABEL: &str = "stirring";

const DEFAULT_STIR_SECONDS: f64 = 5.0;
const AUTO_BOILOVER_POWER: f64 = 0.8;
const AUTO_BOILOVER_AFTER: f64 = 20.0;
const AUTO_BOILOVER_CALM: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    Config(String),
    #[error("state integrity: {0}")]
    Integrity(String),
    #[error("classifier configuration: {0}")]
    Classifier(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// Hob rating in watts.
    pub max_power: f64,
    pub ambient_temp: f64,
    /// Pan-only heat capacity, J/K. Water adds `m · 4186`.
    pub pan_heat_capacity: f64,
    /// W/K to ambient.
    pub loss_coefficient: f64,
    pub coupling_efficiency: f64,
    pub water_boil_temp: f64,
    pub rng_seed: u64,
    /// Half-width of the uniform per-cell noise in rendered thermal frames.
    pub frame_noise: f64,
    /// Radius of the pan disc in thermal-frame cells.
    pub pan_radius_cells: f64,
    /// Trigger a boilover on its own when boiling hard at high power.
    pub auto_boilover: bool,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            max_power: 3000.0,
            ambient_temp: 20.0,
            pan_heat_capacity: 800.0,
            loss_coefficient: 5.0,
            coupling_efficiency: 0.85,
            water_boil_temp: 100.0,
            rng_seed: 0x5eed,
            frame_noise: 0.5,
            pan_radius_cells: 8.0,
            auto_boilover: false,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let finite = [
            self.max_power,
            self.ambient_temp,
            self.pan_heat_capacity,
            self.loss_coefficient,
            self.coupling_efficiency,
            self.water_boil_temp,
            self.frame_noise,
            self.pan_radius_cells,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::Config("non-finite parameter".into()));
        }
        if self.max_power <= 0.0 {
            return Err(PlantError::Config("max_power must be > 0".into()));
        }
        if self.pan_heat_capacity <= 0.0 {
            return Err(PlantError::Config("pan_heat_capacity must be > 0".into()));
        }
        if self.loss_coefficient < 0.0 {
            return Err(PlantError::Config("loss_coefficient must be >= 0".into()));
        }
        if !(self.coupling_efficiency > 0.0 && self.coupling_efficiency <= 1.0) {
            return Err(PlantError::Config("coupling_efficiency must be in (0, 1]".into()));
        }
        if self.frame_noise < 0.0 {
            return Err(PlantError::Config("frame_noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Ground truth of the simulated world at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub time: f64,
    pub pan_present: bool,
    pub pan_temp: f64,
    pub water_mass: f64,
    pub milestone: String,
    pub boilover_active: bool,
    pub stir_elapsed: f64,
    /// Seconds the stirring is still visible to the camera.
    pub stirring_remaining: f64,
    pub ingredients: Vec<String>,
    boilover_auto: bool,
    hard_boil_elapsed: f64,
    calm_elapsed: f64,
}

impl PlantState {
    /// Pan on the hob at ambient temperature, empty, no milestone yet.
    pub fn initial(config: &PlantConfig) -> Self {
        Self {
            time: 0.0,
            pan_present: true,
            pan_temp: config.ambient_temp,
            water_mass: 0.0,
            milestone: String::new(),
            boilover_active: false,
            stir_elapsed: 0.0,
            stirring_remaining: 0.0,
            ingredients: Vec::new(),
            boilover_auto: false,
            hard_boil_elapsed: 0.0,
            calm_elapsed: 0.0,
        }
    }

    pub fn heat_capacity(&self, config: &PlantConfig) -> f64 {
        config.pan_heat_capacity + self.water_mass * WATER_SPECIFIC_HEAT
    }

    /// The label a perfect camera would report: transient scenes (boilover,
    /// stirring) override the recipe milestone when they are part of the
    /// vocabulary.
    pub fn visible_label<'a>(&'a self, vocabulary: &[String]) -> &'a str {
        let has = |l: &str| vocabulary.iter().any(|v| v == l);
        if self.boilover_active && has(BOILOVER_LABEL) {
            BOILOVER_LABEL
        } else if self.stirring_remaining > 0.0 && has(STIRRING_LABEL) {
            STIRRING_LABEL
        } else {
            &self.milestone
        }
    }

    fn check(&self) -> Result<(), PlantError> {
        let values = [
            self.time,
            self.pan_temp,
            self.water_mass,
            self.stir_elapsed,
            self.stirring_remaining,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::Integrity("non-finite state".into()));
        }
        Ok(())
    }

    pub(crate) fn add_water(&mut self, kg: f64, config: &PlantConfig) {
        if kg >= 0.0 {
            // Water arrives at ambient and mixes with the lumped body.
            let before = self.heat_capacity(config);
            let added = kg * WATER_SPECIFIC_HEAT;
            self.pan_temp =
                (before * self.pan_temp + added * config.ambient_temp) / (before + added);
            self.water_mass += kg;
        } else {
            self.water_mass = (self.water_mass + kg).max(0.0);
        }
    }

    pub(crate) fn stir(&mut self, seconds: Option<f64>) {
        self.stir_elapsed = 0.0;
        self.stirring_remaining = seconds.unwrap_or(DEFAULT_STIR_SECONDS);
    }

    pub(crate) fn set_boilover(&mut self, active: bool) {
        self.boilover_active = active;
        self.boilover_auto = false;
        self.hard_boil_elapsed = 0.0;
        self.calm_elapsed = 0.0;
    }
}

/// Advances the plant by one explicit Euler step of `dt` seconds.
pub fn step_plant(
    state: &PlantState,
    power: PowerCommand,
    dt: f64,
    config: &PlantConfig,
) -> Result<PlantState, PlantError> {
    state.check()?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(PlantError::Integrity(format!("dt must be finite and > 0, got {dt}")));
    }
    let fraction = power.fraction();
    if !fraction.is_finite() {
        return Err(PlantError::Integrity("non-finite power".into()));
    }

    let mut next = state.clone();
    let delivered = if state.pan_present {
        fraction * config.max_power
    } else {
        0.0
    };
    let capacity = state.heat_capacity(config);
    let flux = config.coupling_efficiency * delivered
        - config.loss_coefficient * (state.pan_temp - config.ambient_temp);
    next.pan_temp = state.pan_temp + flux / capacity * dt;
    if next.water_mass > 0.0 {
        next.pan_temp = next.pan_temp.min(config.water_boil_temp);
    }
    next.time = state.time + dt;
    next.stir_elapsed = state.stir_elapsed + dt;
    next.stirring_remaining = (state.stirring_remaining - dt).max(0.0);

    if config.auto_boilover {
        let boiling = next.water_mass > 0.0 && next.pan_temp >= config.water_boil_temp - 1e-9;
        let hard = boiling && state.pan_present && fraction > AUTO_BOILOVER_POWER;
        if !next.boilover_active {
            next.hard_boil_elapsed = if hard { state.hard_boil_elapsed + dt } else { 0.0 };
            if next.hard_boil_elapsed > AUTO_BOILOVER_AFTER {
                next.boilover_active = true;
                next.boilover_auto = true;
                next.calm_elapsed = 0.0;
            }
        } else if next.boilover_auto {
            next.calm_elapsed = if hard { 0.0 } else { state.calm_elapsed + dt };
            if next.calm_elapsed >= AUTO_BOILOVER_CALM {
                next.set_boilover(false);
            }
        }
    }

    next.check()?;
    Ok(next)
}
