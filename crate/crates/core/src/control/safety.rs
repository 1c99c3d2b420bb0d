use serde::{Deserialize, Serialize};

use super::PowerCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyReason {
    UserStop,
    PanRemoved,
    #[default]
    None,
}

/// The stop/restart latch. `stopped` is only ever set by the user; pan
/// absence is reported through `reason` without latching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SafetyState {
    pub stopped: bool,
    pub reason: SafetyReason,
}

impl SafetyState {
    pub fn stop(&mut self) {
        self.stopped = true;
        self.reason = SafetyReason::UserStop;
    }

    pub fn restart(&mut self) {
        self.stopped = false;
        self.reason = SafetyReason::None;
    }

    pub fn observe_pan(&mut self, pan_present: bool) {
        if !self.stopped {
            self.reason = if pan_present {
                SafetyReason::None
            } else {
                SafetyReason::PanRemoved
            };
        }
    }
}

/// Final gate before the hob: zero when latched or when there is no pan.
pub fn safety_gate(safety: &SafetyState, cmd: PowerCommand, pan_present: bool) -> PowerCommand {
    if safety.stopped || !pan_present {
        PowerCommand::OFF
    } else {
        cmd
    }
}
