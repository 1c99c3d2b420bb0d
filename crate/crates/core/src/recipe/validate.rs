use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    Malformed,
    UnsupportedSchema,
    EmptyField,
    DuplicateLabel,
    DuplicateStateId,
    DuplicateOverlayId,
    DuplicateTimerId,
    StartCount,
    EndCount,
    MissingNext,
    UnknownTarget,
    UnknownState,
    UndeclaredLabel,
    UndeclaredTimer,
    InvalidParameter,
    UnreachableEnd,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::Malformed => "malformed document",
            DiagnosticCode::UnsupportedSchema => "unsupported schema version",
            DiagnosticCode::EmptyField => "empty field",
            DiagnosticCode::DuplicateLabel => "duplicate label",
            DiagnosticCode::DuplicateStateId => "duplicate state id",
            DiagnosticCode::DuplicateOverlayId => "duplicate overlay id",
            DiagnosticCode::DuplicateTimerId => "duplicate timer id",
            DiagnosticCode::StartCount => "start count",
            DiagnosticCode::EndCount => "end count",
            DiagnosticCode::MissingNext => "missing next",
            DiagnosticCode::UnknownTarget => "unknown target",
            DiagnosticCode::UnknownState => "unknown state",
            DiagnosticCode::UndeclaredLabel => "undeclared label",
            DiagnosticCode::UndeclaredTimer => "undeclared timer",
            DiagnosticCode::InvalidParameter => "invalid parameter",
            DiagnosticCode::UnreachableEnd => "unreachable end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, code: DiagnosticCode, message: impl Into<String>) {
        self.0.push(Diagnostic {
            code,
            message: message.into(),
        });
    }
}

/// Every invariant violation in the document, in a stable order.
pub fn diagnose(doc: &RecipeDocument) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut d = Collector(Vec::new());

    if doc.schema_version != SCHEMA_VERSION {
        d.push(
            UnsupportedSchema,
            format!("schema_version {} (supported: {SCHEMA_VERSION})", doc.schema_version),
        );
    }
    if doc.id.trim().is_empty() {
        d.push(EmptyField, "recipe id is empty");
    }
    if doc.vocabulary.is_empty() {
        d.push(EmptyField, "vocabulary is empty");
    }
    let mut vocab = HashSet::new();
    for label in &doc.vocabulary {
        if !vocab.insert(label.as_str()) {
            d.push(DuplicateLabel, format!("`{label}` declared twice"));
        }
    }

    let mut ids: HashMap<&str, usize> = HashMap::new();
    for (i, s) in doc.states.iter().enumerate() {
        if ids.insert(s.id.as_str(), i).is_some() {
            d.push(DuplicateStateId, format!("state `{}` defined more than once", s.id));
        }
    }

    let mut timers: HashSet<&str> = HashSet::new();
    for s in &doc.states {
        if let StateKind::AutoTimer { timer, .. } = &s.kind {
            if !timers.insert(timer.as_str()) {
                d.push(DuplicateTimerId, format!("timer `{timer}` declared twice"));
            }
        }
    }
    for w in &doc.watch_timers {
        if !timers.insert(w.id.as_str()) {
            d.push(DuplicateTimerId, format!("timer `{}` declared twice", w.id));
        }
        if !(w.duration.is_finite() && w.duration > 0.0) {
            d.push(InvalidParameter, format!("watch timer `{}` duration must be > 0", w.id));
        }
        if !vocab.contains(w.reset_on.as_str()) {
            d.push(
                UndeclaredLabel,
                format!("watch timer `{}` resets on `{}`", w.id, w.reset_on),
            );
        }
    }

    let check_predicate = |d: &mut Collector, p: &Predicate, place: &str| {
        if let Some(label) = p.label() {
            if !vocab.contains(label) {
                d.push(UndeclaredLabel, format!("{place} uses `{label}`"));
            }
        }
        if let Predicate::TimerExpired { timer } = p {
            if !timers.contains(timer.as_str()) {
                d.push(UndeclaredTimer, format!("{place} uses `{timer}`"));
            }
        }
    };

    let starts = doc
        .states
        .iter()
        .filter(|s| matches!(s.kind, StateKind::Start { .. }))
        .count();
    let ends = doc
        .states
        .iter()
        .filter(|s| matches!(s.kind, StateKind::End))
        .count();
    if starts != 1 {
        d.push(StartCount, format!("expected exactly one start state, found {starts}"));
    }
    if ends != 1 {
        d.push(EndCount, format!("expected exactly one end state, found {ends}"));
    }

    for s in &doc.states {
        let place = format!("state `{}`", s.id);
        match &s.kind {
            StateKind::Start { advance } | StateKind::Wait { advance } => {
                check_predicate(&mut d, advance, &place);
            }
            StateKind::AutoSetpoint { setpoint, advance } => {
                if !(setpoint.is_finite() && *setpoint > 0.0 && *setpoint <= 300.0) {
                    d.push(InvalidParameter, format!("{place}: setpoint {setpoint} outside (0, 300]"));
                }
                check_predicate(&mut d, advance, &place);
            }
            StateKind::AutoTimer {
                duration, setpoint, ..
            } => {
                if !(duration.is_finite() && *duration > 0.0) {
                    d.push(InvalidParameter, format!("{place}: duration must be > 0"));
                }
                if !(setpoint.is_finite() && *setpoint > 0.0 && *setpoint <= 300.0) {
                    d.push(InvalidParameter, format!("{place}: setpoint {setpoint} outside (0, 300]"));
                }
            }
            StateKind::End => {}
        }
        match (&s.kind, &s.next) {
            (StateKind::End, Some(next)) => {
                d.push(InvalidParameter, format!("{place}: end state has next `{next}`"));
            }
            (StateKind::End, None) => {}
            (_, None) => d.push(MissingNext, format!("{place} has no transition target")),
            (_, Some(next)) if !ids.contains_key(next.as_str()) => {
                d.push(UnknownTarget, format!("{place} -> `{next}`"));
            }
            _ => {}
        }
    }

    let mut overlay_ids = HashSet::new();
    for o in &doc.overlays {
        let place = format!("overlay `{}`", o.id);
        if !overlay_ids.insert(o.id.as_str()) {
            d.push(DuplicateOverlayId, format!("{place} defined more than once"));
        }
        check_predicate(&mut d, &o.entry, &place);
        check_predicate(&mut d, &o.exit, &place);
        if o.entry == o.exit {
            d.push(InvalidParameter, format!("{place}: entry and exit are identical"));
        }
        if let OverlayAction::ReducePower { scale } = o.action {
            if !(scale > 0.0 && scale < 1.0) {
                d.push(InvalidParameter, format!("{place}: scale {scale} outside (0, 1)"));
            }
        }
        if o.applies_in.is_empty() {
            d.push(EmptyField, format!("{place}: applies_in is empty"));
        }
        for state in &o.applies_in {
            if !ids.contains_key(state.as_str()) {
                d.push(UnknownState, format!("{place} applies in `{state}`"));
            }
        }
    }

    // Follow the forward chain from Start; it must terminate at End.
    if starts == 1 && ends == 1 {
        let start = doc
            .states
            .iter()
            .find(|s| matches!(s.kind, StateKind::Start { .. }))
            .expect("one start");
        let mut seen = BTreeSet::new();
        let mut cursor = Some(start);
        let mut reached = false;
        while let Some(state) = cursor {
            if !seen.insert(state.id.as_str()) {
                break;
            }
            if matches!(state.kind, StateKind::End) {
                reached = true;
                break;
            }
            cursor = state
                .next
                .as_deref()
                .and_then(|n| ids.get(n))
                .map(|&i| &doc.states[i]);
        }
        if !reached {
            d.push(UnreachableEnd, format!("end is not reachable from `{}`", start.id));
        }
    }

    d.0
}
