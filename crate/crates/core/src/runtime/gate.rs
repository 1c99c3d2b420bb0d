use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex, RwLock};

use crate::api::{Ack, Command, CommandKind, RecipeStore};
use crate::labeling::UNLABELED;
use crate::perception::SENSOR_RANGE;

#[derive(Default)]
pub(crate) struct GateState {
    pub stopped: AtomicBool,
    pub session_active: AtomicBool,
    pub clock_bits: AtomicU64,
    pub vocabulary: RwLock<Option<Vec<String>>>,
    next_id: AtomicU64,
}

impl GateState {
    pub fn set_clock(&self, t: f64) {
        self.clock_bits.store(t.to_bits(), Ordering::SeqCst);
    }

    pub fn clock(&self) -> f64 {
        f64::from_bits(self.clock_bits.load(Ordering::SeqCst))
    }
}

/// Edge validation in front of the control loop's command queue. Cheap to
/// clone; every client holds its own handle.
#[derive(Clone)]
pub struct CommandGate {
    tx: Arc<Mutex<Sender<Command>>>,
    state: Arc<GateState>,
    recipes: RecipeStore,
}

impl CommandGate {
    pub(crate) fn new(tx: Sender<Command>, state: Arc<GateState>, recipes: RecipeStore) -> Self {
        CommandGate {
            tx: Arc::new(Mutex::new(tx)),
            state,
            recipes,
        }
    }

    pub fn recipes(&self) -> &RecipeStore {
        &self.recipes
    }

    pub fn stopped(&self) -> bool {
        self.state.stopped.load(Ordering::SeqCst)
    }

    fn check(&self, kind: &CommandKind) -> Result<(), String> {
        if self.stopped() && !matches!(kind, CommandKind::Restart | CommandKind::Stop) {
            return Err("stopped".into());
        }
        let vocabulary = self.state.vocabulary.read().expect("gate poisoned").clone();
        let session = self.state.session_active.load(Ordering::SeqCst);
        match kind {
            CommandKind::SetSetpoint { celsius } => {
                if !(celsius.is_finite() && *celsius > 0.0 && *celsius <= SENSOR_RANGE.1) {
                    return Err(format!("setpoint out of range (0, {}]", SENSOR_RANGE.1));
                }
            }
            CommandKind::SetPower { fraction } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err("fraction out of range".into());
                }
            }
            CommandKind::LoadRecipe { id } => {
                if !self.recipes.contains(id) {
                    return Err(format!("unknown recipe `{id}`"));
                }
            }
            CommandKind::StartRecipe
            | CommandKind::SkipForward
            | CommandKind::SkipBack
            | CommandKind::CancelWarning { .. } => {
                if vocabulary.is_none() {
                    return Err("no recipe loaded".into());
                }
            }
            CommandKind::StartSession { session_id } => {
                if vocabulary.is_none() {
                    return Err("no recipe loaded".into());
                }
                if session {
                    return Err("a capture session is already active".into());
                }
                if let Some(id) = session_id {
                    if id.is_empty()
                        || !id
                            .chars()
                            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                    {
                        return Err("session id must match [A-Za-z0-9_-]+".into());
                    }
                }
            }
            CommandKind::StopSession => {
                if !session {
                    return Err("no capture session is active".into());
                }
            }
            CommandKind::SetLabel { label } => {
                if !session {
                    return Err("no capture session is active".into());
                }
                let known = vocabulary
                    .as_ref()
                    .is_some_and(|v| v.iter().any(|l| l == label));
                if label != UNLABELED && !known {
                    return Err(format!("label `{label}` is not in the recipe vocabulary"));
                }
            }
            CommandKind::Stop | CommandKind::Restart => {}
        }
        Ok(())
    }

    /// Validate and enqueue. Accepted commands are stamped with the current
    /// sim time and handed to the control loop in order.
    pub fn submit(&self, mut cmd: Command) -> Ack {
        if let Err(reason) = self.check(&cmd.kind) {
            return Ack::Rejected { reason };
        }
        match &cmd.kind {
            CommandKind::Stop => self.state.stopped.store(true, Ordering::SeqCst),
            CommandKind::Restart => self.state.stopped.store(false, Ordering::SeqCst),
            CommandKind::StartSession { .. } => {
                self.state.session_active.store(true, Ordering::SeqCst)
            }
            CommandKind::StopSession => self.state.session_active.store(false, Ordering::SeqCst),
            CommandKind::LoadRecipe { id } => {
                if let Some(r) = self.recipes.get(id) {
                    *self.state.vocabulary.write().expect("gate poisoned") =
                        Some(r.vocabulary().to_vec());
                }
            }
            _ => {}
        }
        cmd.issued_at = Some(self.state.clock());
        let id = self.state.next_id.fetch_add(1, Ordering::SeqCst);
        match self.tx.lock().expect("gate poisoned").send(cmd) {
            Ok(()) => Ack::Accepted { id },
            Err(_) => Ack::rejected("control loop is not running"),
        }
    }
}
