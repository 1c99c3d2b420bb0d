use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A recipe document as written on disk. [`crate::recipe::load_recipe`]
/// turns it into a validated [`crate::recipe::Recipe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeDocument {
    pub schema_version: u32,
    pub id: String,
    pub title: String,
    pub vocabulary: Vec<String>,
    pub states: Vec<StateNode>,
    #[serde(default)]
    pub overlays: Vec<OverlayRule>,
    #[serde(default)]
    pub watch_timers: Vec<WatchTimer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateNode {
    pub id: String,
    #[serde(flatten)]
    pub kind: StateKind,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Start { advance: Predicate },
    Wait { advance: Predicate },
    AutoSetpoint { setpoint: f64, advance: Predicate },
    AutoTimer { timer: String, duration: f64, setpoint: f64 },
    End,
}

impl StateKind {
    pub fn name(&self) -> &'static str {
        match self {
            StateKind::Start { .. } => "start",
            StateKind::Wait { .. } => "wait",
            StateKind::AutoSetpoint { .. } => "auto_setpoint",
            StateKind::AutoTimer { .. } => "auto_timer",
            StateKind::End => "end",
        }
    }

    /// States in which the hob is under closed-loop control.
    pub fn heats(&self) -> bool {
        matches!(self, StateKind::AutoSetpoint { .. } | StateKind::AutoTimer { .. })
    }

    pub fn setpoint(&self) -> Option<f64> {
        match self {
            StateKind::AutoSetpoint { setpoint, .. } | StateKind::AutoTimer { setpoint, .. } => {
                Some(*setpoint)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    MilestoneIs { label: String },
    MilestoneIsNot { label: String },
    TimerExpired { timer: String },
    PanAbsent,
    PanPresent,
}

impl Predicate {
    pub fn label(&self) -> Option<&str> {
        match self {
            Predicate::MilestoneIs { label } | Predicate::MilestoneIsNot { label } => Some(label),
            _ => None,
        }
    }

    pub fn is_classifier(&self) -> bool {
        self.label().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRule {
    pub id: String,
    pub entry: Predicate,
    pub exit: Predicate,
    pub action: OverlayAction,
    /// Warning text raised while the overlay is active.
    pub message: String,
    pub applies_in: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OverlayAction {
    ShowWarning,
    ReducePower { scale: f64 },
    HeatOff,
}

/// Engine-owned countdown restarted whenever `reset_on` is perceived
/// (e.g. a stir reminder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchTimer {
    pub id: String,
    pub duration: f64,
    pub reset_on: String,
}
