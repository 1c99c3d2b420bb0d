use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::model::*;
use super::Recipe;
use crate::perception::MilestoneEvent;

/// Shown while the pan is off the hob.
pub const INTERLOCK_MESSAGE: &str = "return pan to hob to continue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    SetSetpoint { celsius: f64 },
    PowerScale { scale: f64 },
    HeatOff,
    HeatOn,
    Display { text: String },
    RaiseWarning { id: String, text: String },
    ClearWarning { id: String },
    StartTimer { id: String, seconds: f64 },
    RecipeComplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransitionCause {
    Start,
    Classifier { label: String },
    Timer { timer: String },
    Override { kind: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub timestamp: f64,
    pub from: Option<String>,
    pub to: String,
    pub cause: TransitionCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Override {
    SkipForward,
    SkipBack,
    CancelWarning { id: String },
}

impl Override {
    pub fn name(&self) -> &'static str {
        match self {
            Override::SkipForward => "skip_forward",
            Override::SkipBack => "skip_back",
            Override::CancelWarning { .. } => "cancel_warning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// How long a cancelled warning stays suppressed, in seconds.
    pub cancel_cooldown: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            cancel_cooldown: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineStatus {
    pub recipe_id: String,
    pub current_state: String,
    pub active_overlays: BTreeSet<String>,
    /// Remaining seconds on every running timer.
    pub timers: BTreeMap<String, f64>,
    pub display_text: String,
    pub history: Vec<TransitionRecord>,
    pub complete: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct TickInputs<'a> {
    pub time: f64,
    pub dt: f64,
    pub events: &'a [MilestoneEvent],
    pub pan_present: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineOutput {
    pub actions: Vec<Action>,
    pub transitions: Vec<TransitionRecord>,
    pub diagnostics: Vec<String>,
}

impl EngineOutput {
    pub fn merge(&mut self, other: EngineOutput) {
        self.actions.extend(other.actions);
        self.transitions.extend(other.transitions);
        self.diagnostics.extend(other.diagnostics);
    }
}

/// How a milestone predicate is tested. Transition guards and overlay
/// exits need a fresh event; overlay entries look at the latest label.
#[derive(Clone, Copy, PartialEq)]
enum Sense {
    Edge,
    Level,
}

/// Interprets one recipe against perception events and manual overrides.
#[derive(Debug, Clone)]
pub struct Engine {
    recipe: Arc<Recipe>,
    config: EngineConfig,
    status: EngineStatus,
    started: bool,
    visited: Vec<String>,
    last_milestone: Option<String>,
    fresh: Option<String>,
    suppressed: BTreeMap<String, f64>,
    pan_present: bool,
    power_scale: f64,
}

impl Engine {
    pub fn new(recipe: Arc<Recipe>, config: EngineConfig) -> Self {
        let start = recipe.start_state();
        let status = EngineStatus {
            recipe_id: recipe.id().to_string(),
            current_state: start.id.clone(),
            active_overlays: BTreeSet::new(),
            timers: BTreeMap::new(),
            display_text: String::new(),
            history: Vec::new(),
            complete: false,
        };
        Engine {
            recipe,
            config,
            status,
            started: false,
            visited: Vec::new(),
            last_milestone: None,
            fresh: None,
            suppressed: BTreeMap::new(),
            pan_present: true,
            power_scale: 1.0,
        }
    }

    pub fn recipe(&self) -> &Arc<Recipe> {
        &self.recipe
    }

    pub fn status(&self) -> &EngineStatus {
        &self.status
    }

    pub fn started(&self) -> bool {
        self.started
    }

    pub fn last_milestone(&self) -> Option<&str> {
        self.last_milestone.as_deref()
    }

    fn current(&self) -> &StateNode {
        self.recipe
            .state(&self.status.current_state)
            .expect("current state exists")
    }

    fn heat_blocked(&self) -> bool {
        !self.pan_present
            || self.recipe.overlays().iter().any(|o| {
                o.action == OverlayAction::HeatOff && self.status.active_overlays.contains(&o.id)
            })
    }

    /// Enter the start state. Calling it twice is a no-op.
    pub fn start(&mut self, time: f64) -> EngineOutput {
        let mut out = EngineOutput::default();
        if self.started {
            out.diagnostics.push("recipe already started".into());
            return out;
        }
        self.started = true;
        for w in self.recipe.watch_timers() {
            self.status.timers.insert(w.id.clone(), w.duration);
        }
        let start = self.recipe.start_state().id.clone();
        self.enter(&start, time, TransitionCause::Start, true, &mut out);
        out
    }

    /// One engine step: perception events, timers, overlays, then at most
    /// one main-state transition.
    pub fn tick(&mut self, inputs: TickInputs<'_>) -> EngineOutput {
        let mut out = EngineOutput::default();
        if !self.started {
            return out;
        }

        for v in self.suppressed.values_mut() {
            *v -= inputs.dt;
        }
        self.suppressed.retain(|_, v| *v > 0.0);
        if !self.status.complete {
            for v in self.status.timers.values_mut() {
                *v = (*v - inputs.dt).max(0.0);
            }
        }

        let mut events: Vec<&MilestoneEvent> = Vec::with_capacity(inputs.events.len());
        for e in inputs.events {
            if self.recipe.vocabulary().contains(&e.label) {
                events.push(e);
            } else {
                out.diagnostics
                    .push(format!("ignored event with unknown label `{}`", e.label));
            }
        }
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        self.fresh = None;
        for e in &events {
            for w in self.recipe.watch_timers() {
                if w.reset_on == e.label {
                    self.status.timers.insert(w.id.clone(), w.duration);
                }
            }
            self.last_milestone = Some(e.label.clone());
            self.fresh = Some(e.label.clone());
        }

        out.actions.extend(self.pan_interlock(inputs.pan_present));
        if self.status.complete {
            self.finish(&mut out);
            return out;
        }

        self.evaluate_overlays(&mut out);

        let current = self.current().clone();
        match &current.kind {
            StateKind::Start { advance }
            | StateKind::Wait { advance }
            | StateKind::AutoSetpoint { advance, .. } => {
                if self.holds(advance, Sense::Edge) {
                    let cause = match advance {
                        Predicate::MilestoneIs { .. } | Predicate::MilestoneIsNot { .. } => {
                            TransitionCause::Classifier {
                                label: self.fresh.clone().unwrap_or_default(),
                            }
                        }
                        Predicate::TimerExpired { timer } => TransitionCause::Timer {
                            timer: timer.clone(),
                        },
                        Predicate::PanAbsent | Predicate::PanPresent => {
                            TransitionCause::Classifier {
                                label: "pan".into(),
                            }
                        }
                    };
                    self.advance(inputs.time, cause, &mut out);
                }
            }
            StateKind::AutoTimer { timer, .. } => {
                if self.status.timers.get(timer).is_some_and(|r| *r <= 0.0) {
                    let cause = TransitionCause::Timer {
                        timer: timer.clone(),
                    };
                    self.advance(inputs.time, cause, &mut out);
                }
            }
            StateKind::End => {}
        }

        self.finish(&mut out);
        out
    }

    /// Track pan presence. Removing the pan from a heating state cuts the
    /// heat and asks for it back; returning it restores the step.
    pub fn pan_interlock(&mut self, pan_present: bool) -> Vec<Action> {
        let mut actions = Vec::new();
        if pan_present == self.pan_present {
            return actions;
        }
        self.pan_present = pan_present;
        if !self.started || self.status.complete {
            return actions;
        }
        let heats = self.current().kind.heats();
        if !pan_present {
            if heats {
                actions.push(Action::HeatOff);
            }
            self.status.display_text = INTERLOCK_MESSAGE.into();
            actions.push(Action::Display {
                text: INTERLOCK_MESSAGE.into(),
            });
        } else {
            if heats && !self.heat_blocked() {
                actions.push(Action::HeatOn);
            }
            let text = self.current().instruction.clone();
            self.status.display_text = text.clone();
            actions.push(Action::Display { text });
        }
        actions
    }

    pub fn manual_override(&mut self, time: f64, cmd: &Override) -> EngineOutput {
        let mut out = EngineOutput::default();
        if !self.started {
            out.diagnostics.push("recipe not started".into());
            return out;
        }
        let cause = TransitionCause::Override {
            kind: cmd.name().into(),
        };
        match cmd {
            Override::SkipForward => {
                if self.status.complete {
                    out.diagnostics.push("already at the end state".into());
                } else {
                    self.advance(time, cause, &mut out);
                }
            }
            Override::SkipBack => {
                if self.visited.len() < 2 {
                    out.diagnostics.push("already at the start state".into());
                } else {
                    self.visited.pop();
                    let prev = self.visited.last().cloned().expect("len >= 2");
                    self.status.complete = false;
                    self.enter(&prev, time, cause, false, &mut out);
                }
            }
            Override::CancelWarning { id } => {
                if self.status.active_overlays.contains(id) {
                    let rule = self
                        .recipe
                        .overlays()
                        .iter()
                        .find(|o| o.id == *id)
                        .cloned()
                        .expect("active overlay exists");
                    self.deactivate(&rule, &mut out.actions);
                    self.suppressed.insert(id.clone(), self.config.cancel_cooldown);
                } else {
                    out.diagnostics.push(format!("no active warning `{id}`"));
                }
            }
        }
        self.finish(&mut out);
        out
    }

    fn holds(&self, p: &Predicate, sense: Sense) -> bool {
        let seen = match sense {
            Sense::Edge => self.fresh.as_deref(),
            Sense::Level => self.last_milestone.as_deref(),
        };
        match p {
            Predicate::MilestoneIs { label } => seen == Some(label.as_str()),
            Predicate::MilestoneIsNot { label } => seen.is_some_and(|l| l != label),
            Predicate::TimerExpired { timer } => {
                self.status.timers.get(timer).is_some_and(|r| *r <= 0.0)
            }
            Predicate::PanAbsent => !self.pan_present,
            Predicate::PanPresent => self.pan_present,
        }
    }

    fn evaluate_overlays(&mut self, out: &mut EngineOutput) {
        let state = self.status.current_state.clone();
        let rules: Vec<OverlayRule> = self.recipe.overlays().to_vec();
        for rule in rules.iter().filter(|o| o.applies_in.contains(&state)) {
            if self.status.active_overlays.contains(&rule.id) {
                if self.holds(&rule.exit, Sense::Edge) {
                    self.deactivate(rule, &mut out.actions);
                }
            } else if !self.suppressed.contains_key(&rule.id) && self.holds(&rule.entry, Sense::Level)
            {
                self.activate(rule, &mut out.actions);
            }
        }
    }

    fn activate(&mut self, rule: &OverlayRule, actions: &mut Vec<Action>) {
        self.status.active_overlays.insert(rule.id.clone());
        actions.push(Action::RaiseWarning {
            id: rule.id.clone(),
            text: rule.message.clone(),
        });
        match rule.action {
            OverlayAction::ShowWarning => {}
            OverlayAction::ReducePower { .. } => self.update_power_scale(actions),
            OverlayAction::HeatOff => actions.push(Action::HeatOff),
        }
    }

    fn deactivate(&mut self, rule: &OverlayRule, actions: &mut Vec<Action>) {
        if !self.status.active_overlays.remove(&rule.id) {
            return;
        }
        actions.push(Action::ClearWarning {
            id: rule.id.clone(),
        });
        match rule.action {
            OverlayAction::ShowWarning => {}
            OverlayAction::ReducePower { .. } => self.update_power_scale(actions),
            OverlayAction::HeatOff => {
                if self.current().kind.heats() && !self.heat_blocked() {
                    actions.push(Action::HeatOn);
                }
            }
        }
    }

    fn update_power_scale(&mut self, actions: &mut Vec<Action>) {
        let scale: f64 = self
            .recipe
            .overlays()
            .iter()
            .filter(|o| self.status.active_overlays.contains(&o.id))
            .map(|o| match o.action {
                OverlayAction::ReducePower { scale } => scale,
                _ => 1.0,
            })
            .product();
        if scale != self.power_scale {
            self.power_scale = scale;
            actions.push(Action::PowerScale { scale });
        }
    }

    fn advance(&mut self, time: f64, cause: TransitionCause, out: &mut EngineOutput) {
        let Some(next) = self.current().next.clone() else {
            return;
        };
        if self.current().kind.heats()
            && matches!(self.recipe.state(&next).map(|s| &s.kind), Some(StateKind::End))
        {
            out.actions.push(Action::HeatOff);
        }
        self.enter(&next, time, cause, true, out);
    }

    fn enter(
        &mut self,
        target: &str,
        time: f64,
        cause: TransitionCause,
        push: bool,
        out: &mut EngineOutput,
    ) {
        let node = self.recipe.state(target).expect("validated target").clone();
        let rules: Vec<OverlayRule> = self.recipe.overlays().to_vec();
        for rule in rules.iter().filter(|o| !o.applies_in.contains(&node.id)) {
            self.deactivate(rule, &mut out.actions);
        }

        let from = self.visited.last().cloned();
        if let Some(prev) = self.recipe.state(&self.status.current_state) {
            if let StateKind::AutoTimer { timer, .. } = &prev.kind {
                self.status.timers.remove(timer);
            }
        }
        self.status.current_state = node.id.clone();
        if push {
            self.visited.push(node.id.clone());
        }
        self.status.display_text = node.instruction.clone();

        match &node.kind {
            StateKind::Start { .. } | StateKind::Wait { .. } => {
                out.actions.push(Action::Display {
                    text: node.instruction.clone(),
                });
                out.actions.push(Action::HeatOff);
            }
            StateKind::AutoSetpoint { setpoint, .. } => {
                out.actions.push(Action::Display {
                    text: node.instruction.clone(),
                });
                out.actions.push(Action::SetSetpoint {
                    celsius: *setpoint,
                });
            }
            StateKind::AutoTimer {
                timer,
                duration,
                setpoint,
            } => {
                self.status.timers.insert(timer.clone(), *duration);
                out.actions.push(Action::Display {
                    text: node.instruction.clone(),
                });
                out.actions.push(Action::StartTimer {
                    id: timer.clone(),
                    seconds: *duration,
                });
                out.actions.push(Action::SetSetpoint {
                    celsius: *setpoint,
                });
            }
            StateKind::End => {
                self.status.complete = true;
                out.actions.push(Action::HeatOff);
                out.actions.push(Action::Display {
                    text: node.instruction.clone(),
                });
                out.actions.push(Action::RecipeComplete);
            }
        }
        if !self.pan_present && !self.status.complete {
            self.status.display_text = INTERLOCK_MESSAGE.into();
            out.actions.push(Action::Display {
                text: INTERLOCK_MESSAGE.into(),
            });
        }

        let record = TransitionRecord {
            timestamp: time,
            from: if matches!(cause, TransitionCause::Start) {
                None
            } else {
                from
            },
            to: node.id.clone(),
            cause,
        };
        self.status.history.push(record.clone());
        out.transitions.push(record);
    }

    /// Drop redundant heat toggles and make sure nothing re-enables the
    /// hob while it must stay off.
    fn finish(&self, out: &mut EngineOutput) {
        let mut cleaned: Vec<Action> = Vec::with_capacity(out.actions.len());
        for a in out.actions.drain(..) {
            let dup = matches!(
                (cleaned.last(), &a),
                (Some(Action::HeatOff), Action::HeatOff) | (Some(Action::HeatOn), Action::HeatOn)
            );
            if !dup {
                cleaned.push(a);
            }
        }
        out.actions = cleaned;
        if self.heat_blocked() {
            let heat_pos = out
                .actions
                .iter()
                .rposition(|a| matches!(a, Action::HeatOn | Action::SetSetpoint { .. }));
            let off_pos = out.actions.iter().rposition(|a| *a == Action::HeatOff);
            if let Some(h) = heat_pos {
                if off_pos.is_none_or(|o| o < h) {
                    out.actions.push(Action::HeatOff);
                }
            }
            out.actions.retain(|a| *a != Action::HeatOn);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipe::bundled_recipe;

    fn engine(id: &str) -> Engine {
        let r = Arc::new(bundled_recipe(id).unwrap());
        Engine::new(r, EngineConfig::default())
    }

    fn ev(label: &str, t: f64) -> MilestoneEvent {
        MilestoneEvent {
            label: label.into(),
            timestamp: t,
            mean_confidence: 0.9,
        }
    }

    fn tick(e: &mut Engine, t: f64, events: &[MilestoneEvent], pan: bool) -> EngineOutput {
        e.tick(TickInputs {
            time: t,
            dt: 0.1,
            events,
            pan_present: pan,
        })
    }

    #[test]
    fn start_enters_start_state() {
        let mut e = engine("pasta");
        let out = e.start(0.0);
        assert_eq!(out.transitions.len(), 1);
        assert_eq!(out.transitions[0].cause, TransitionCause::Start);
        assert!(out.actions.contains(&Action::HeatOff));
        assert_eq!(e.status().current_state, "start");
        assert!(e.start(1.0).transitions.is_empty());
    }

    #[test]
    fn classifier_event_advances_once_per_tick() {
        let mut e = engine("pasta");
        e.start(0.0);
        let out = tick(&mut e, 1.0, &[ev("pan_on", 0.9), ev("add_water", 0.95)], true);
        // Only the most recent event counts, and it does not match start.
        assert!(out.transitions.is_empty());
        let out = tick(&mut e, 1.1, &[ev("pan_on", 1.0)], true);
        assert_eq!(out.transitions.len(), 1);
        assert_eq!(e.status().current_state, "add_water");
    }

    #[test]
    fn auto_setpoint_entry_sets_target() {
        let mut e = engine("pasta");
        e.start(0.0);
        tick(&mut e, 1.0, &[ev("pan_on", 1.0)], true);
        let out = tick(&mut e, 2.0, &[ev("add_water", 2.0)], true);
        assert!(out
            .actions
            .contains(&Action::SetSetpoint { celsius: 100.0 }));
        assert_eq!(e.status().current_state, "heat_water");
    }

    fn to_simmer(e: &mut Engine) {
        e.start(0.0);
        for (i, l) in ["pan_on", "add_water", "water_boiling", "add_pasta"]
            .iter()
            .enumerate()
        {
            tick(e, i as f64 + 1.0, &[ev(l, i as f64 + 1.0)], true);
        }
        assert_eq!(e.status().current_state, "simmer");
    }

    #[test]
    fn timer_expiry_ends_recipe_with_heat_off() {
        let mut e = engine("pasta");
        to_simmer(&mut e);
        let mut t = 4.0;
        let mut last = EngineOutput::default();
        for _ in 0..7200 {
            t += 0.1;
            last = tick(&mut e, t, &[ev("stirring", t)], true);
            if e.status().complete {
                break;
            }
        }
        assert!(e.status().complete);
        assert_eq!(last.actions.first(), Some(&Action::HeatOff));
        assert!(last.actions.contains(&Action::RecipeComplete));
        assert!(matches!(
            last.transitions[0].cause,
            TransitionCause::Timer { .. }
        ));
    }

    #[test]
    fn pan_removal_during_setpoint_cuts_heat_same_tick() {
        let mut e = engine("pasta");
        e.start(0.0);
        tick(&mut e, 1.0, &[ev("pan_on", 1.0)], true);
        tick(&mut e, 2.0, &[ev("add_water", 2.0)], true);
        let out = tick(&mut e, 3.0, &[], false);
        assert_eq!(out.actions[0], Action::HeatOff);
        assert!(out.actions.contains(&Action::Display {
            text: INTERLOCK_MESSAGE.into()
        }));
        assert!(e.status().active_overlays.contains("pan_off"));
        let out = tick(&mut e, 4.0, &[], true);
        assert!(out.actions.contains(&Action::HeatOn));
        assert!(out.actions.contains(&Action::Display {
            text: "Auto heating water until boiling".into()
        }));
        assert!(e.status().active_overlays.is_empty());
    }

    #[test]
    fn pan_removal_during_wait_only_displays() {
        let mut e = engine("pasta");
        e.start(0.0);
        tick(&mut e, 1.0, &[ev("pan_on", 1.0)], true);
        let out = tick(&mut e, 2.0, &[], false);
        assert!(!out.actions.contains(&Action::HeatOff));
        assert!(out.actions.contains(&Action::Display {
            text: INTERLOCK_MESSAGE.into()
        }));
        let out = tick(&mut e, 3.0, &[], true);
        assert!(!out.actions.contains(&Action::HeatOn));
    }

    #[test]
    fn no_heat_while_pan_absent_even_on_transition() {
        let mut e = engine("pasta");
        e.start(0.0);
        tick(&mut e, 1.0, &[ev("pan_on", 1.0)], true);
        tick(&mut e, 2.0, &[], false);
        let out = tick(&mut e, 3.0, &[ev("add_water", 3.0)], false);
        let last_heat = out
            .actions
            .iter()
            .rposition(|a| matches!(a, Action::SetSetpoint { .. }))
            .unwrap();
        let last_off = out.actions.iter().rposition(|a| *a == Action::HeatOff).unwrap();
        assert!(last_off > last_heat);
    }

    #[test]
    fn boilover_reduces_and_restores_power() {
        let mut e = engine("pasta");
        to_simmer(&mut e);
        let out = tick(&mut e, 10.0, &[ev("boilover", 10.0)], true);
        assert!(out.actions.contains(&Action::PowerScale { scale: 0.3 }));
        assert!(out.actions.iter().any(|a| matches!(a, Action::RaiseWarning { id, .. } if id == "boilover")));
        let out = tick(&mut e, 11.0, &[], true);
        assert!(out.actions.is_empty());
        let out = tick(&mut e, 12.0, &[ev("stirring", 12.0)], true);
        assert!(out.actions.contains(&Action::PowerScale { scale: 1.0 }));
        assert!(out.actions.contains(&Action::ClearWarning {
            id: "boilover".into()
        }));
    }

    #[test]
    fn stir_reminder_fires_and_clears() {
        let mut e = engine("pasta");
        to_simmer(&mut e);
        let mut t = 4.0;
        let mut raised_at = None;
        while t < 400.0 {
            t += 0.1;
            let out = tick(&mut e, t, &[], true);
            if out.actions.iter().any(|a| matches!(a, Action::RaiseWarning { id, .. } if id == "stir")) {
                raised_at = Some(t);
                break;
            }
        }
        // The 300 s budget counts ticks: four were spent reaching simmer.
        let raised_at = raised_at.expect("stir reminder");
        assert!((raised_at - 303.6).abs() < 0.15, "{raised_at}");
        let out = tick(&mut e, t + 0.1, &[ev("stirring", t + 0.1)], true);
        assert!(out.actions.contains(&Action::ClearWarning { id: "stir".into() }));
        let out = tick(&mut e, t + 0.2, &[], true);
        assert!(out.actions.is_empty());
    }

    #[test]
    fn cancelled_warning_is_suppressed_for_cooldown() {
        let mut e = engine("pasta");
        to_simmer(&mut e);
        tick(&mut e, 10.0, &[ev("boilover", 10.0)], true);
        let out = e.manual_override(10.05, &Override::CancelWarning { id: "boilover".into() });
        assert!(out.actions.contains(&Action::ClearWarning {
            id: "boilover".into()
        }));
        let mut t = 10.0;
        let mut reraised = None;
        while t < 100.0 {
            t += 0.1;
            let out = tick(&mut e, t, &[], true);
            if out.actions.iter().any(|a| matches!(a, Action::RaiseWarning { .. })) {
                reraised = Some(t);
                break;
            }
        }
        let reraised = reraised.unwrap();
        assert!((reraised - 70.0).abs() < 0.25, "{reraised}");
        let out = e.manual_override(80.0, &Override::CancelWarning { id: "nope".into() });
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn skip_forward_and_back() {
        let mut e = engine("pasta");
        e.start(0.0);
        let out = e.manual_override(1.0, &Override::SkipBack);
        assert!(out.transitions.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
        e.manual_override(1.0, &Override::SkipForward);
        e.manual_override(2.0, &Override::SkipForward);
        assert_eq!(e.status().current_state, "heat_water");
        let out = e.manual_override(3.0, &Override::SkipBack);
        assert_eq!(e.status().current_state, "add_water");
        assert!(out.actions.contains(&Action::HeatOff));
        assert!(matches!(
            out.transitions[0].cause,
            TransitionCause::Override { .. }
        ));
        for _ in 0..10 {
            e.manual_override(4.0, &Override::SkipForward);
        }
        assert!(e.status().complete);
        let out = e.manual_override(5.0, &Override::SkipForward);
        assert!(out.transitions.is_empty());
        e.manual_override(6.0, &Override::SkipBack);
        assert_eq!(e.status().current_state, "simmer");
        assert!(!e.status().complete);
        assert_eq!(e.status().timers["pasta_timeout"], 720.0);
    }

    #[test]
    fn unknown_labels_are_ignored_with_diagnostic() {
        let mut e = engine("pasta");
        e.start(0.0);
        let out = tick(&mut e, 1.0, &[ev("tofu", 1.0)], true);
        assert!(out.transitions.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn overlays_only_active_in_applicable_states() {
        let mut e = engine("pasta");
        e.start(0.0);
        tick(&mut e, 1.0, &[ev("boilover", 1.0)], true);
        assert!(e.status().active_overlays.is_empty());
    }
}
