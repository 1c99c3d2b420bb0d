//! Recipe documents, validation and the state-machine interpreter.

mod engine;
mod model;
mod validate;

use std::collections::HashMap;

use thiserror::Error;

pub use engine::{
    Action, Engine, EngineConfig, EngineOutput, EngineStatus, Override, TickInputs,
    TransitionCause, TransitionRecord, INTERLOCK_MESSAGE,
};
pub use model::*;
pub use validate::{diagnose, Diagnostic, DiagnosticCode};

#[derive(Debug, Error)]
#[error("recipe rejected with {} diagnostic(s): {}", .0.len(), join(.0))]
pub struct RecipeError(pub Vec<Diagnostic>);

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl RecipeError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.0
    }
}

/// A recipe that passed validation. Immutable once built.
#[derive(Debug, Clone)]
pub struct Recipe {
    doc: RecipeDocument,
    index: HashMap<String, usize>,
    start: usize,
}

impl Recipe {
    pub fn from_document(doc: RecipeDocument) -> Result<Self, RecipeError> {
        let diagnostics = diagnose(&doc);
        if !diagnostics.is_empty() {
            return Err(RecipeError(diagnostics));
        }
        let index = doc
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        let start = doc
            .states
            .iter()
            .position(|s| matches!(s.kind, StateKind::Start { .. }))
            .expect("validated");
        Ok(Recipe { doc, index, start })
    }

    pub fn document(&self) -> &RecipeDocument {
        &self.doc
    }

    pub fn id(&self) -> &str {
        &self.doc.id
    }

    pub fn title(&self) -> &str {
        &self.doc.title
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.doc.vocabulary
    }

    pub fn states(&self) -> &[StateNode] {
        &self.doc.states
    }

    pub fn overlays(&self) -> &[OverlayRule] {
        &self.doc.overlays
    }

    pub fn watch_timers(&self) -> &[WatchTimer] {
        &self.doc.watch_timers
    }

    pub fn state(&self, id: &str) -> Option<&StateNode> {
        self.index.get(id).map(|&i| &self.doc.states[i])
    }

    pub fn start_state(&self) -> &StateNode {
        &self.doc.states[self.start]
    }

    /// States along the forward chain from start to end.
    pub fn main_path(&self) -> Vec<&StateNode> {
        let mut path = vec![self.start_state()];
        while let Some(next) = path.last().and_then(|s| s.next.as_deref()) {
            path.push(self.state(next).expect("validated"));
        }
        path
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("recipe serializes")
    }
}

/// Parse and validate a recipe document.
pub fn load_recipe(text: &str) -> Result<Recipe, RecipeError> {
    let doc: RecipeDocument = serde_json::from_str(text).map_err(|e| {
        RecipeError(vec![Diagnostic {
            code: DiagnosticCode::Malformed,
            message: e.to_string(),
        }])
    })?;
    Recipe::from_document(doc)
}

const BUNDLED: &[(&str, &str)] = &[
    ("pasta", include_str!("../../assets/recipes/pasta.json")),
    ("tomato_sauce", include_str!("../../assets/recipes/tomato_sauce.json")),
    (
        "pasta_tomato_sauce",
        include_str!("../../assets/recipes/pasta_tomato_sauce.json"),
    ),
];

/// Recipes shipped with the runtime, keyed by id.
pub fn bundled() -> Vec<Recipe> {
    BUNDLED
        .iter()
        .map(|(_, text)| load_recipe(text).expect("bundled recipe is valid"))
        .collect()
}

pub fn bundled_recipe(id: &str) -> Option<Recipe> {
    BUNDLED
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| load_recipe(text).expect("bundled recipe is valid"))
}
