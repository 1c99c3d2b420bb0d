use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandKind {
    SetSetpoint { celsius: f64 },
    SetPower { fraction: f64 },
    Stop,
    Restart,
    LoadRecipe { id: String },
    StartRecipe,
    SkipForward,
    SkipBack,
    CancelWarning { id: String },
    StartSession {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
    },
    StopSession,
    SetLabel { label: String },
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::SetSetpoint { .. } => "set_setpoint",
            CommandKind::SetPower { .. } => "set_power",
            CommandKind::Stop => "stop",
            CommandKind::Restart => "restart",
            CommandKind::LoadRecipe { .. } => "load_recipe",
            CommandKind::StartRecipe => "start_recipe",
            CommandKind::SkipForward => "skip_forward",
            CommandKind::SkipBack => "skip_back",
            CommandKind::CancelWarning { .. } => "cancel_warning",
            CommandKind::StartSession { .. } => "start_session",
            CommandKind::StopSession => "stop_session",
            CommandKind::SetLabel { .. } => "set_label",
        }
    }

    /// Human corrections to the recipe flow.
    pub fn is_override(&self) -> bool {
        matches!(
            self,
            CommandKind::SkipForward | CommandKind::SkipBack | CommandKind::CancelWarning { .. }
        )
    }
}

fn default_issuer() -> String {
    "api".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    #[serde(flatten)]
    pub kind: CommandKind,
    #[serde(default = "default_issuer")]
    pub issued_by: String,
    /// Filled in by the gate with the sim time of acceptance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issued_at: Option<f64>,
}

impl Command {
    pub fn new(kind: CommandKind, issued_by: &str) -> Self {
        Command {
            kind,
            issued_by: issued_by.into(),
            issued_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Ack {
    Accepted { id: u64 },
    Rejected { reason: String },
}

impl Ack {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Ack::Accepted { .. })
    }

    pub fn rejected(reason: impl Into<String>) -> Self {
        Ack::Rejected {
            reason: reason.into(),
        }
    }
}
