use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PlantConfig, PlantState};

/// Tolerance used when matching event times against tick windows, so that
/// `k / tick_hz` rounding never moves an event into the neighbouring tick.
const WINDOW_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("malformed script: {0}")]
    Malformed(String),
    #[error("event {index} at t={at}: times must be strictly increasing")]
    NotIncreasing { index: usize, at: f64 },
    #[error("event {index} at t={at}: undeclared milestone label `{label}`")]
    UndeclaredLabel { index: usize, at: f64, label: String },
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "args", rename_all = "snake_case")]
pub enum ScriptEvent {
    /// Negative amounts drain water from the pan.
    AddWater { kg: f64 },
    AddIngredient { label: String },
    RemovePan,
    ReturnPan,
    Stir {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seconds: Option<f64>,
    },
    TriggerBoilover,
    ClearBoilover,
    SetMilestone { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEntry")]
pub struct ScriptEntry {
    pub t: f64,
    #[serde(flatten)]
    pub event: ScriptEvent,
}

// `args` may be omitted for events whose arguments are all optional.
#[derive(Deserialize)]
struct RawEntry {
    t: f64,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    args: Option<serde_json::Value>,
}

impl TryFrom<RawEntry> for ScriptEntry {
    type Error = String;

    fn try_from(raw: RawEntry) -> Result<Self, Self::Error> {
        let parse = |args: Option<serde_json::Value>| {
            let mut obj = serde_json::Map::new();
            obj.insert("type".into(), raw.kind.clone().into());
            if let Some(a) = args {
                obj.insert("args".into(), a);
            }
            serde_json::from_value::<ScriptEvent>(obj.into())
        };
        let event = match raw.args {
            Some(a) => parse(Some(a)),
            None => parse(None).or_else(|_| parse(Some(serde_json::json!({})))),
        }
        .map_err(|e| e.to_string())?;
        Ok(ScriptEntry { t: raw.t, event })
    }
}

/// Timed ground-truth events for one simulated run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimScript {
    pub events: Vec<ScriptEntry>,
}

impl SimScript {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let script: SimScript =
            serde_json::from_str(text).map_err(|e| ScriptError::Malformed(e.to_string()))?;
        script.validate_structure().map_err(|mut errs| errs.remove(0))?;
        Ok(script)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    /// Checks ordering and argument ranges; labels are checked separately
    /// against a recipe vocabulary by [`SimScript::validate`].
    pub fn validate_structure(&self) -> Result<(), Vec<ScriptError>> {
        let mut errors = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (index, entry) in self.events.iter().enumerate() {
            if !entry.t.is_finite() || entry.t < 0.0 {
                errors.push(ScriptError::InvalidEvent {
                    index,
                    reason: format!("time {} is not a finite non-negative number", entry.t),
                });
            } else if entry.t <= last {
                errors.push(ScriptError::NotIncreasing { index, at: entry.t });
            }
            last = last.max(entry.t);
            match &entry.event {
                ScriptEvent::AddWater { kg } if !kg.is_finite() => {
                    errors.push(ScriptEvent::invalid(index, "water amount must be finite"))
                }
                ScriptEvent::Stir { seconds: Some(s) } if !(s.is_finite() && *s >= 0.0) => {
                    errors.push(ScriptEvent::invalid(index, "stir duration must be >= 0"))
                }
                _ => {}
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Full validation against the milestone vocabulary of the recipe the
    /// script will drive. Reports every problem, not just the first.
    pub fn validate(&self, vocabulary: &[String]) -> Result<(), Vec<ScriptError>> {
        let mut errors = self.validate_structure().err().unwrap_or_default();
        for (index, entry) in self.events.iter().enumerate() {
            if let ScriptEvent::SetMilestone { label } = &entry.event {
                if !vocabulary.iter().any(|v| v == label) {
                    errors.push(ScriptError::UndeclaredLabel {
                        index,
                        at: entry.t,
                        label: label.clone(),
                    });
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Time of the last scripted event.
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    /// Events whose time falls inside `[t0, t1)`.
    pub fn window(&self, t0: f64, t1: f64) -> impl Iterator<Item = &ScriptEntry> {
        let start = self.events.partition_point(|e| e.t < t0 - WINDOW_EPS);
        self.events[start..]
            .iter()
            .take_while(move |e| e.t < t1 - WINDOW_EPS)
    }
}

impl ScriptEvent {
    fn invalid(index: usize, reason: &str) -> ScriptError {
        ScriptError::InvalidEvent {
            index,
            reason: reason.to_string(),
        }
    }

    pub fn apply(&self, state: &mut PlantState, config: &PlantConfig) {
        match self {
            ScriptEvent::AddWater { kg } => state.add_water(*kg, config),
            ScriptEvent::AddIngredient { label } => state.ingredients.push(label.clone()),
            ScriptEvent::RemovePan => state.pan_present = false,
            ScriptEvent::ReturnPan => state.pan_present = true,
            ScriptEvent::Stir { seconds } => state.stir(*seconds),
            ScriptEvent::TriggerBoilover => state.set_boilover(true),
            ScriptEvent::ClearBoilover => state.set_boilover(false),
            ScriptEvent::SetMilestone { label } => state.milestone = label.clone(),
        }
    }
}

/// Applies, in order, every script event with time in `[t0, t1)`.
pub fn apply_script(
    state: &PlantState,
    script: &SimScript,
    t0: f64,
    t1: f64,
    config: &PlantConfig,
) -> PlantState {
    let mut next = state.clone();
    for entry in script.window(t0, t1) {
        entry.event.apply(&mut next, config);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vec<String> {
        ["pan_on", "water_boiling"].map(String::from).to_vec()
    }

    #[test]
    fn parses_documented_format() {
        let text = r#"{"events": [
            {"t": 0.0, "type": "set_milestone", "args": {"label": "pan_on"}},
            {"t": 5.0, "type": "remove_pan"},
            {"t": 6.0, "type": "add_water", "args": {"kg": 0.3}},
            {"t": 7.0, "type": "stir"},
            {"t": 8.0, "type": "stir", "args": {"seconds": 3.0}}
        ]}"#;
        let script = SimScript::from_json(text).unwrap();
        assert_eq!(script.events.len(), 5);
        assert_eq!(script.events[1].event, ScriptEvent::RemovePan);
        assert_eq!(script.events[3].event, ScriptEvent::Stir { seconds: None });
        let again = SimScript::from_json(&script.to_json()).unwrap();
        assert_eq!(again, script);
    }

    #[test]
    fn rejects_non_increasing_times() {
        let text = r#"{"events": [
            {"t": 1.0, "type": "remove_pan"},
            {"t": 1.0, "type": "return_pan"}
        ]}"#;
        assert!(matches!(
            SimScript::from_json(text),
            Err(ScriptError::NotIncreasing { index: 1, .. })
        ));
    }

    #[test]
    fn undeclared_label_reported_before_run() {
        let script = SimScript {
            events: vec![
                ScriptEntry { t: 1.0, event: ScriptEvent::SetMilestone { label: "pan_on".into() } },
                ScriptEntry { t: 2.0, event: ScriptEvent::SetMilestone { label: "souffle".into() } },
            ],
        };
        let errors = script.validate(&vocab()).unwrap_err();
        assert_eq!(errors.len(), 1);
        assert!(matches!(&errors[0], ScriptError::UndeclaredLabel { label, .. } if label == "souffle"));
    }

    #[test]
    fn remove_pan_applies_at_first_tick_at_or_after() {
        let config = PlantConfig::default();
        let script = SimScript {
            events: vec![ScriptEntry { t: 5.0, event: ScriptEvent::RemovePan }],
        };
        let mut state = PlantState::initial(&config);
        for k in 0..60u32 {
            let t0 = f64::from(k) / 10.0;
            let t1 = f64::from(k + 1) / 10.0;
            state = apply_script(&state, &script, t0, t1, &config);
            assert_eq!(state.pan_present, t0 < 5.0 - 1e-9, "tick {k}");
        }
    }

    #[test]
    fn off_grid_times_land_in_exactly_one_tick() {
        let config = PlantConfig::default();
        let script = SimScript {
            events: vec![ScriptEntry { t: 0.3, event: ScriptEvent::AddIngredient { label: "x".into() } }],
        };
        let hits: Vec<u32> = (0..10u32)
            .filter(|k| {
                let t0 = f64::from(*k) / 10.0;
                let t1 = f64::from(*k + 1) / 10.0;
                script.window(t0, t1).count() == 1
            })
            .collect();
        assert_eq!(hits, vec![3]);
        let _ = config;
    }

    #[test]
    fn stir_resets_elapsed() {
        let config = PlantConfig::default();
        let mut state = PlantState::initial(&config);
        state.stir_elapsed = 300.0;
        let script = SimScript {
            events: vec![ScriptEntry { t: 300.0, event: ScriptEvent::Stir { seconds: None } }],
        };
        let state = apply_script(&state, &script, 300.0, 300.1, &config);
        assert_eq!(state.stir_elapsed, 0.0);
    }

    #[test]
    fn set_milestone_changes_ground_truth() {
        let config = PlantConfig::default();
        let state = PlantState::initial(&config);
        let script = SimScript {
            events: vec![ScriptEntry {
                t: 1.0,
                event: ScriptEvent::SetMilestone { label: "water_boiling".into() },
            }],
        };
        let state = apply_script(&state, &script, 1.0, 1.1, &config);
        assert_eq!(state.milestone, "water_boiling");
    }
}
