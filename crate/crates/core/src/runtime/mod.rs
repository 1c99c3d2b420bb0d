//! The single-writer control loop: plant, perception, recipe engine,
//! controller and capture advance together one tick at a time.

mod corpus;
mod gate;
mod headless;

pub use corpus::{run_corpus, CorpusSession, CorpusSpec, Segment};
pub use gate::CommandGate;
pub use headless::{run_recipe_script, RunReport};

use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::Ordering;
use std::sync::mpsc::{self, Receiver};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::api::{
    Command, CommandKind, EventLog, Health, HealthStatus, LogCategory, RecipeStore, SharedLog,
    TelemetrySnapshot, Warning,
};
use crate::config::Config;
use crate::control::{
    angle_to_power, pid_step, power_to_angle, safety_gate, servo_step, Calibration, PidGains,
    PidState, PowerCommand, SafetyState, ServoModel,
};
use crate::labeling::{CaptureSession, RecordMetadata};
use crate::perception::{
    build_backend, extract_pan_temperature, BackendKind, MilestoneEvent, Observation,
    PanTemperatureReading, Perception, RollingFilter,
};
use crate::plant::{
    apply_script, render_thermal, step_plant, PlantState, ScriptError, SimScript, ThermalFrame,
};
use crate::recipe::{Action, Engine, EngineOutput, Override, Recipe, TickInputs};
use gate::GateState;

pub const IDLE_STATE: &str = "idle";

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("plant: {0}")]
    Plant(#[from] crate::plant::PlantError),
    #[error("{0}")]
    Rejected(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HeatMode {
    Off,
    Closed,
    Manual(f64),
}

pub struct Runtime {
    config: Config,
    dt: f64,
    tick: u64,
    perception_every: u64,
    plant: PlantState,
    script: SimScript,
    gains: PidGains,
    pid: PidState,
    mode: HeatMode,
    heat_enabled: bool,
    power_scale: f64,
    calibration: Calibration,
    servo: ServoModel,
    servo_rng: ChaCha8Rng,
    servo_feedback: f64,
    safety: SafetyState,
    commanded: PowerCommand,
    delivered: PowerCommand,
    reading: PanTemperatureReading,
    frame: ThermalFrame,
    sensor_faults: u64,
    perception: Option<Perception>,
    perception_done: bool,
    pending_events: Vec<MilestoneEvent>,
    engine: Option<Engine>,
    recipes: RecipeStore,
    session: Option<CaptureSession>,
    sessions_started: u64,
    warnings: Vec<Warning>,
    display_text: String,
    log: SharedLog,
    gate_state: Arc<GateState>,
    gate: CommandGate,
    rx: Receiver<Command>,
    schedule: VecDeque<(f64, Command)>,
    snapshot: TelemetrySnapshot,
}

impl Runtime {
    pub fn new(config: Config, recipes: RecipeStore, log: SharedLog) -> Result<Self, RuntimeError> {
        config.validate()?;
        let dt = 1.0 / config.control.tick_hz;
        let perception_every = (config.control.tick_hz / config.perception.rate_hz).round() as u64;
        let plant = PlantState::initial(&config.plant);
        let (tx, rx) = mpsc::channel();
        let gate_state = Arc::new(GateState::default());
        let gate = CommandGate::new(tx, Arc::clone(&gate_state), recipes.clone());
        let servo = ServoModel {
            angle: config.servo.calibration.angle_min(),
            target_angle: config.servo.calibration.angle_min(),
            slew_rate: config.servo.slew_rate,
            feedback_noise: config.servo.feedback_noise,
            angle_min: config.servo.calibration.angle_min(),
            angle_max: config.servo.calibration.angle_max(),
        };
        let reading = PanTemperatureReading {
            celsius: plant.pan_temp,
            valid: false,
            timestamp: 0.0,
        };
        let mut rt = Runtime {
            dt,
            tick: 0,
            perception_every,
            script: SimScript::default(),
            gains: config.control.gains,
            pid: PidState::default(),
            mode: HeatMode::Off,
            heat_enabled: false,
            power_scale: 1.0,
            calibration: config.servo.calibration.clone(),
            servo_feedback: servo.angle,
            servo,
            servo_rng: ChaCha8Rng::seed_from_u64(config.servo.seed),
            safety: SafetyState::default(),
            commanded: PowerCommand::OFF,
            delivered: PowerCommand::OFF,
            reading,
            frame: ThermalFrame::uniform(0.0, config.plant.ambient_temp),
            sensor_faults: 0,
            perception: None,
            perception_done: false,
            pending_events: Vec::new(),
            engine: None,
            recipes,
            session: None,
            sessions_started: 0,
            warnings: Vec::new(),
            display_text: String::new(),
            log,
            gate_state,
            gate,
            rx,
            schedule: VecDeque::new(),
            snapshot: placeholder_snapshot(),
            plant,
            config,
        };
        rt.snapshot = rt.build_snapshot();
        Ok(rt)
    }

    /// Runtime with the bundled recipes and an in-memory log.
    pub fn with_defaults(config: Config) -> Result<Self, RuntimeError> {
        Self::new(config, RecipeStore::with_bundled(), EventLog::in_memory().shared())
    }

    pub fn gate(&self) -> CommandGate {
        self.gate.clone()
    }

    pub fn log(&self) -> &SharedLog {
        &self.log
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / self.config.control.tick_hz
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn plant(&self) -> &PlantState {
        &self.plant
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    /// Thermal frame the controller measured on the last tick.
    pub fn latest_frame(&self) -> &ThermalFrame {
        &self.frame
    }

    pub fn snapshot(&self) -> &TelemetrySnapshot {
        &self.snapshot
    }

    pub fn session(&self) -> Option<&CaptureSession> {
        self.session.as_ref()
    }

    pub fn recipe_complete(&self) -> bool {
        self.engine.as_ref().is_some_and(|e| e.status().complete)
    }

    /// Submit through the same gate the HTTP layer uses.
    pub fn submit(&self, kind: CommandKind, issued_by: &str) -> crate::api::Ack {
        self.gate.submit(Command::new(kind, issued_by))
    }

    /// Queue a command for submission at the first tick starting at or
    /// after `t`.
    pub fn schedule(&mut self, t: f64, kind: CommandKind, issued_by: &str) {
        let cmd = Command::new(kind, issued_by);
        let pos = self.schedule.partition_point(|(at, _)| *at <= t);
        self.schedule.insert(pos, (t, cmd));
    }

    /// Replace the plant script. Labels are checked against the loaded
    /// recipe's vocabulary when there is one.
    pub fn load_script(&mut self, script: SimScript) -> Result<(), RuntimeError> {
        match &self.engine {
            Some(e) => script
                .validate(e.recipe().vocabulary())
                .map_err(|mut errs| errs.remove(0))?,
            None => script
                .validate_structure()
                .map_err(|mut errs| errs.remove(0))?,
        }
        self.script = script;
        Ok(())
    }

    fn log_entry(&self, t: f64, category: LogCategory, payload: Value) {
        self.log
            .write()
            .expect("event log poisoned")
            .append(t, category, payload);
    }

    /// Advance one control tick.
    pub fn step(&mut self) -> Result<&TelemetrySnapshot, RuntimeError> {
        let hz = self.config.control.tick_hz;
        let t0 = self.tick as f64 / hz;
        let t1 = (self.tick + 1) as f64 / hz;
        self.gate_state.set_clock(t0);

        // 1. Scripted world events for [t0, t1).
        self.plant = apply_script(&self.plant, &self.script, t0, t1, &self.config.plant);

        // 2. Commands. Scheduled ones go through the gate after whatever is
        // already queued, so they see the state it leaves behind.
        self.drain_commands(t0);
        while self
            .schedule
            .front()
            .is_some_and(|(at, _)| *at <= t0 + 1e-9)
        {
            let (_, cmd) = self.schedule.pop_front().expect("checked");
            let name = cmd.kind.name();
            if let crate::api::Ack::Rejected { reason } = self.gate.submit(cmd) {
                self.log_entry(
                    t0,
                    LogCategory::Fault,
                    json!({"source": "schedule", "command": name, "reason": reason}),
                );
            }
            self.drain_commands(t0);
        }

        // 3. Recipe engine, paused while latched off.
        self.safety.observe_pan(self.plant.pan_present);
        if !self.safety.stopped {
            if let Some(engine) = &mut self.engine {
                let events = std::mem::take(&mut self.pending_events);
                let out = engine.tick(TickInputs {
                    time: t0,
                    dt: self.dt,
                    events: &events,
                    pan_present: self.plant.pan_present,
                });
                self.apply_engine_output(t0, out);
            }
        }

        // 4. Measure, control, actuate, integrate.
        let frame = render_thermal(&self.plant, &self.config.plant);
        self.reading = extract_pan_temperature(&frame, self.config.plant.ambient_temp);
        self.frame = frame;
        let command = self.control_output(t0);
        self.commanded = if self.safety.stopped {
            PowerCommand::OFF
        } else {
            command.scaled(self.power_scale)
        };
        self.servo.set_target(power_to_angle(self.commanded, &self.calibration));
        self.servo = servo_step(&self.servo, self.dt);
        self.servo_feedback = self.servo.feedback(&mut self.servo_rng);
        self.delivered = safety_gate(
            &self.safety,
            angle_to_power(self.servo.angle, &self.calibration),
            self.plant.pan_present,
        );
        let mut next = step_plant(&self.plant, self.delivered, self.dt, &self.config.plant)?;
        next.time = t1;
        self.plant = next;

        // 5. Perception at its own cadence; events reach the engine next tick.
        if (self.tick + 1).is_multiple_of(self.perception_every) {
            self.observe(t1);
        }

        // 6. Capture.
        self.capture(t1);

        self.tick += 1;
        self.gate_state.set_clock(t1);
        self.snapshot = self.build_snapshot();
        Ok(&self.snapshot)
    }

    fn drain_commands(&mut self, t: f64) {
        while let Ok(cmd) = self.rx.try_recv() {
            self.handle_command(t, cmd);
        }
    }

    /// Run until `t_end` (sim seconds) or until `stop` says so.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut stop: impl FnMut(&Runtime) -> bool,
    ) -> Result<(), RuntimeError> {
        while self.time() + 1e-9 < t_end {
            self.step()?;
            if stop(self) {
                break;
            }
        }
        Ok(())
    }

    fn control_output(&mut self, t: f64) -> PowerCommand {
        if !self.heat_enabled {
            return PowerCommand::OFF;
        }
        match self.mode {
            HeatMode::Off => PowerCommand::OFF,
            HeatMode::Manual(f) => PowerCommand::saturating(f),
            HeatMode::Closed => {
                match pid_step(&self.pid, &self.gains, self.reading.celsius, self.dt) {
                    Ok((state, cmd)) => {
                        self.pid = state;
                        cmd
                    }
                    Err(fault) => {
                        self.sensor_faults += 1;
                        self.log_entry(
                            t,
                            LogCategory::Fault,
                            json!({"source": "sensor", "message": "non-finite measurement"}),
                        );
                        fault.held
                    }
                }
            }
        }
    }

    fn observe(&mut self, t: f64) {
        if self.perception_done {
            return;
        }
        let Some(perception) = &mut self.perception else {
            return;
        };
        // A simulated camera has nothing to report until the script sets a scene.
        if perception.backend_kind() == BackendKind::Simulated && self.plant.milestone.is_empty() {
            return;
        }
        let obs = Observation {
            time: t,
            plant: Some(&self.plant),
            frame_ref: None,
        };
        let frame = perception.observe(&obs);
        if let Some(event) = frame.event {
            self.pending_events.push(event);
        }
        if let Some(fault) = frame.fault {
            self.log_entry(
                t,
                LogCategory::Fault,
                json!({"source": "perception", "message": fault}),
            );
        }
        if frame.end_of_stream {
            self.perception_done = true;
            self.log_entry(
                t,
                LogCategory::Fault,
                json!({"source": "perception", "message": "classifier stream ended"}),
            );
        }
    }

    fn capture(&mut self, t: f64) {
        let Some(session) = &mut self.session else {
            return;
        };
        if !session.due(t) {
            return;
        }
        let frame = render_thermal(&self.plant, &self.config.plant);
        let payload = json!({ "thermal": frame, "scene": self.plant });
        let engine_state = self
            .engine
            .as_ref()
            .filter(|e| e.started())
            .map_or(IDLE_STATE.to_string(), |e| e.status().current_state.clone());
        let metadata = RecordMetadata {
            pan_temp: self.reading.celsius,
            power: self.delivered.fraction(),
            engine_state,
            corrective_input: None,
        };
        session.capture_tick(payload, metadata);
    }

    fn handle_command(&mut self, t: f64, cmd: Command) {
        self.log_entry(
            t,
            LogCategory::Command,
            serde_json::to_value(&cmd).expect("command serializes"),
        );
        if cmd.kind.is_override() {
            self.log_entry(
                t,
                LogCategory::Override,
                json!({
                    "kind": cmd.kind.name(),
                    "issued_by": cmd.issued_by,
                    "state": self.engine.as_ref().map(|e| e.status().current_state.clone()),
                }),
            );
            if let Some(session) = &mut self.session {
                session.note_correction(cmd.kind.name());
            }
        }
        let result = self.apply_command(t, &cmd.kind);
        if let Err(reason) = result {
            self.log_entry(
                t,
                LogCategory::Fault,
                json!({"source": "command", "command": cmd.kind.name(), "reason": reason}),
            );
        }
    }

    fn apply_command(&mut self, t: f64, kind: &CommandKind) -> Result<(), String> {
        match kind {
            CommandKind::SetSetpoint { celsius } => self.set_setpoint(*celsius),
            CommandKind::SetPower { fraction } => {
                self.mode = HeatMode::Manual(*fraction);
                self.heat_enabled = true;
            }
            CommandKind::Stop => self.safety.stop(),
            CommandKind::Restart => {
                self.safety.restart();
                self.pid.reset();
            }
            CommandKind::LoadRecipe { id } => {
                let recipe = self
                    .recipes
                    .get(id)
                    .ok_or_else(|| format!("unknown recipe `{id}`"))?;
                self.load_recipe(recipe);
            }
            CommandKind::StartRecipe => {
                let recipe = self
                    .engine
                    .as_ref()
                    .map(|e| Arc::clone(e.recipe()))
                    .ok_or("no recipe loaded")?;
                let mut engine = Engine::new(recipe, self.config.engine.clone());
                let mut out = engine.start(t);
                out.actions
                    .extend(engine.pan_interlock(self.plant.pan_present));
                self.engine = Some(engine);
                self.reset_outputs();
                self.apply_engine_output(t, out);
            }
            CommandKind::SkipForward | CommandKind::SkipBack | CommandKind::CancelWarning { .. } => {
                let o = match kind {
                    CommandKind::SkipForward => Override::SkipForward,
                    CommandKind::SkipBack => Override::SkipBack,
                    CommandKind::CancelWarning { id } => Override::CancelWarning { id: id.clone() },
                    _ => unreachable!(),
                };
                let engine = self.engine.as_mut().ok_or("no recipe loaded")?;
                let out = engine.manual_override(t, &o);
                self.apply_engine_output(t, out);
            }
            CommandKind::StartSession { session_id } => {
                if self.session.is_some() {
                    return Err("a capture session is already active".into());
                }
                let engine = self.engine.as_ref().ok_or("no recipe loaded")?;
                let recipe = Arc::clone(engine.recipe());
                self.sessions_started += 1;
                let id = session_id
                    .clone()
                    .unwrap_or_else(|| format!("{}-{:03}", recipe.id(), self.sessions_started));
                match CaptureSession::start_in_directory(
                    &id,
                    recipe.id(),
                    recipe.vocabulary(),
                    t,
                    &self.config.labeling,
                ) {
                    Ok(s) => {
                        self.session = Some(s);
                        self.gate_state.session_active.store(true, Ordering::SeqCst);
                    }
                    Err(e) => {
                        self.gate_state.session_active.store(false, Ordering::SeqCst);
                        return Err(e.to_string());
                    }
                }
            }
            CommandKind::StopSession => {
                let session = self.session.take().ok_or("no capture session is active")?;
                self.gate_state.session_active.store(false, Ordering::SeqCst);
                let summary = session.stop();
                self.log_entry(
                    t,
                    LogCategory::Action,
                    json!({"type": "session_stopped", "summary": summary}),
                );
            }
            CommandKind::SetLabel { label } => {
                let session = self.session.as_mut().ok_or("no capture session is active")?;
                session.set_label(label).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    fn load_recipe(&mut self, recipe: Arc<Recipe>) {
        let vocabulary = recipe.vocabulary().to_vec();
        self.perception = match (
            build_backend(&self.config.perception.backend, &vocabulary),
            RollingFilter::new(self.config.perception.filter, &vocabulary),
        ) {
            (Ok(backend), Ok(filter)) => Some(Perception::new(backend, filter)),
            (Err(e), _) => {
                self.log_entry(
                    self.time(),
                    LogCategory::Fault,
                    json!({"source": "perception", "message": e.to_string()}),
                );
                None
            }
            (_, Err(e)) => {
                self.log_entry(
                    self.time(),
                    LogCategory::Fault,
                    json!({"source": "perception", "message": e.to_string()}),
                );
                None
            }
        };
        self.perception_done = false;
        self.pending_events.clear();
        *self.gate_state.vocabulary.write().expect("gate poisoned") = Some(vocabulary);
        self.engine = Some(Engine::new(recipe, self.config.engine.clone()));
        self.reset_outputs();
    }

    fn reset_outputs(&mut self) {
        self.mode = HeatMode::Off;
        self.heat_enabled = false;
        self.power_scale = 1.0;
        self.warnings.clear();
        self.display_text.clear();
    }

    fn set_setpoint(&mut self, celsius: f64) {
        if self.mode != HeatMode::Closed || !self.heat_enabled {
            self.pid = PidState::new(celsius);
        } else {
            self.pid.setpoint = celsius;
        }
        self.mode = HeatMode::Closed;
        self.heat_enabled = true;
    }

    fn apply_engine_output(&mut self, t: f64, out: EngineOutput) {
        let recipe = self.engine.as_ref().map(|e| e.recipe().id().to_string());
        for tr in &out.transitions {
            self.log_entry(
                t,
                LogCategory::Transition,
                json!({
                    "recipe": recipe,
                    "from": tr.from,
                    "to": tr.to,
                    "cause": tr.cause,
                }),
            );
        }
        for d in &out.diagnostics {
            self.log_entry(
                t,
                LogCategory::Fault,
                json!({"source": "engine", "message": d}),
            );
        }
        for action in out.actions {
            self.log_entry(
                t,
                LogCategory::Action,
                serde_json::to_value(&action).expect("action serializes"),
            );
            match action {
                Action::SetSetpoint { celsius } => self.set_setpoint(celsius),
                Action::PowerScale { scale } => self.power_scale = scale,
                Action::HeatOff => self.heat_enabled = false,
                Action::HeatOn => {
                    if self.mode != HeatMode::Off && !self.heat_enabled {
                        self.heat_enabled = true;
                        self.pid.reset();
                    }
                }
                Action::Display { text } => self.display_text = text,
                Action::RaiseWarning { id, text } => {
                    self.log_entry(
                        t,
                        LogCategory::Warning,
                        json!({"id": id, "text": text, "state": self.engine.as_ref().map(|e| e.status().current_state.clone())}),
                    );
                    self.warnings.retain(|w| w.id != id);
                    self.warnings.push(Warning { id, text });
                }
                Action::ClearWarning { id } => self.warnings.retain(|w| w.id != id),
                Action::StartTimer { .. } | Action::RecipeComplete => {}
            }
        }
    }

    fn build_snapshot(&self) -> TelemetrySnapshot {
        let log = self.log.read().expect("event log poisoned");
        let capture_degraded = self
            .session
            .as_ref()
            .is_some_and(|s| s.writer_status().degraded);
        let perception_faults = self.perception.as_ref().map_or(0, |p| p.faults());
        let degraded = log.degraded() || capture_degraded || self.sensor_faults > 0;
        let engine = self.engine.as_ref();
        let started = engine.filter(|e| e.started());
        TelemetrySnapshot {
            tick: self.tick,
            time: self.time(),
            pan_temp: self.reading.celsius,
            pan_temp_valid: self.reading.valid,
            setpoint: (self.mode == HeatMode::Closed).then_some(self.pid.setpoint),
            power: self.delivered.fraction(),
            commanded_power: self.commanded.fraction(),
            power_scale: self.power_scale,
            servo_angle: self.servo_feedback,
            heat_enabled: self.heat_enabled,
            stopped: self.safety.stopped,
            pan_present: self.plant.pan_present,
            engine_state: started.map_or(IDLE_STATE.to_string(), |e| e.status().current_state.clone()),
            recipe_id: engine.map(|e| e.recipe().id().to_string()),
            recipe_complete: started.is_some_and(|e| e.status().complete),
            display_text: self.display_text.clone(),
            active_warnings: self.warnings.clone(),
            timers: started.map_or_else(BTreeMap::new, |e| e.status().timers.clone()),
            last_milestone: started.and_then(|e| e.last_milestone().map(String::from)),
            latest_confidences: self.perception.as_ref().and_then(|p| p.latest().cloned()),
            session: self.session.as_ref().map(|s| s.session_id().to_string()),
            session_label: self.session.as_ref().map(|s| s.active_label().to_string()),
            session_records: self.session.as_ref().map_or(0, |s| s.records()),
            health: Health {
                status: if degraded {
                    HealthStatus::Degraded
                } else {
                    HealthStatus::Ok
                },
                log_degraded: log.degraded(),
                capture_degraded,
                perception_faults,
                sensor_faults: self.sensor_faults,
                stale: false,
            },
        }
    }

    /// Stop any capture session and flush the log.
    pub fn shutdown(&mut self) {
        if let Some(session) = self.session.take() {
            let t = self.time();
            let summary = session.stop();
            self.log_entry(
                t,
                LogCategory::Action,
                json!({"type": "session_stopped", "summary": summary}),
            );
        }
        self.log.write().expect("event log poisoned").flush();
    }
}

fn placeholder_snapshot() -> TelemetrySnapshot {
    TelemetrySnapshot {
        tick: 0,
        time: 0.0,
        pan_temp: 0.0,
        pan_temp_valid: false,
        setpoint: None,
        power: 0.0,
        commanded_power: 0.0,
        power_scale: 1.0,
        servo_angle: 0.0,
        heat_enabled: false,
        stopped: false,
        pan_present: true,
        engine_state: IDLE_STATE.into(),
        recipe_id: None,
        recipe_complete: false,
        display_text: String::new(),
        active_warnings: Vec::new(),
        timers: BTreeMap::new(),
        last_milestone: None,
        latest_confidences: None,
        session: None,
        session_label: None,
        session_records: 0,
        health: Health {
            status: HealthStatus::Ok,
            log_degraded: false,
            capture_degraded: false,
            perception_faults: 0,
            sensor_faults: 0,
            stale: false,
        },
    }
}
