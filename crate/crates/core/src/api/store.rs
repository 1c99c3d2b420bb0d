use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::recipe::{self, Diagnostic, DiagnosticCode, Recipe, RecipeError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecipeSummary {
    pub id: String,
    pub title: String,
    pub states: usize,
    pub vocabulary: Vec<String>,
}

/// Validated recipes known to the service, shared between the HTTP layer
/// and the control loop.
#[derive(Debug, Clone, Default)]
pub struct RecipeStore {
    inner: Arc<RwLock<BTreeMap<String, Arc<Recipe>>>>,
}

impl RecipeStore {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_bundled() -> Self {
        let store = Self::empty();
        for r in recipe::bundled() {
            store.insert(r);
        }
        store
    }

    pub fn insert(&self, recipe: Recipe) -> Arc<Recipe> {
        let recipe = Arc::new(recipe);
        self.inner
            .write()
            .expect("recipe store poisoned")
            .insert(recipe.id().to_string(), Arc::clone(&recipe));
        recipe
    }

    /// Validate and store. `expected_id` guards PUT-by-id requests.
    pub fn put_json(&self, text: &str, expected_id: Option<&str>) -> Result<Arc<Recipe>, RecipeError> {
        let recipe = recipe::load_recipe(text)?;
        if let Some(id) = expected_id {
            if recipe.id() != id {
                return Err(RecipeError(vec![Diagnostic {
                    code: DiagnosticCode::InvalidParameter,
                    message: format!("document id `{}` does not match `{id}`", recipe.id()),
                }]));
            }
        }
        Ok(self.insert(recipe))
    }

    pub fn get(&self, id: &str) -> Option<Arc<Recipe>> {
        self.inner.read().expect("recipe store poisoned").get(id).cloned()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.inner.read().expect("recipe store poisoned").contains_key(id)
    }

    pub fn list(&self) -> Vec<RecipeSummary> {
        self.inner
            .read()
            .expect("recipe store poisoned")
            .values()
            .map(|r| RecipeSummary {
                id: r.id().into(),
                title: r.title().into(),
                states: r.states().len(),
                vocabulary: r.vocabulary().to_vec(),
            })
            .collect()
    }
}
