use std::time::Instant;

use serde::Serialize;

use super::{Runtime, RuntimeError};
use crate::api::{Ack, CommandKind, EventLog, LogCategory, RecipeStore};
use crate::config::Config;
use crate::plant::SimScript;

/// Event totals for one run, read back from the event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub recipe_id: String,
    pub complete: bool,
    pub sim_seconds: f64,
    pub wall_seconds: f64,
    pub classifier_transitions: usize,
    pub timer_transitions: usize,
    pub override_transitions: usize,
    pub warnings: usize,
    pub overrides: usize,
    pub faults: usize,
    pub final_state: String,
}

impl RunReport {
    pub fn tally(log: &EventLog) -> RunReport {
        let mut r = RunReport::default();
        for e in log.entries() {
            match e.category {
                LogCategory::Transition => match e.payload["cause"]["type"].as_str() {
                    Some("classifier") => r.classifier_transitions += 1,
                    Some("timer") => r.timer_transitions += 1,
                    Some("override") => r.override_transitions += 1,
                    _ => {}
                },
                LogCategory::Warning => r.warnings += 1,
                LogCategory::Override => r.overrides += 1,
                LogCategory::Fault => r.faults += 1,
                _ => {}
            }
        }
        r
    }
}

/// Run a recipe against a plant script as fast as possible, stopping when
/// the recipe completes or at `max_time` (default: script end + 15 min).
pub fn run_recipe_script(
    config: Config,
    recipes: RecipeStore,
    recipe_id: &str,
    script: SimScript,
    max_time: Option<f64>,
) -> Result<(Runtime, RunReport), RuntimeError> {
    let recipe = recipes
        .get(recipe_id)
        .ok_or_else(|| RuntimeError::Rejected(format!("unknown recipe `{recipe_id}`")))?;
    script
        .validate(recipe.vocabulary())
        .map_err(|mut e| e.remove(0))?;
    let limit = max_time.unwrap_or(script.end_time() + 900.0);
    let log_path = config.log.path.clone();
    let log = match &log_path {
        Some(p) => EventLog::open(p, config.log.checkpoint_every).map_err(|e| {
            RuntimeError::Rejected(format!("cannot open event log {}: {e}", p.display()))
        })?,
        None => EventLog::in_memory(),
    };
    let mut rt = Runtime::new(config, recipes, log.shared())?;
    for kind in [
        CommandKind::LoadRecipe {
            id: recipe_id.into(),
        },
        CommandKind::StartRecipe,
    ] {
        if let Ack::Rejected { reason } = rt.submit(kind, "headless") {
            return Err(RuntimeError::Rejected(reason));
        }
    }
    rt.script = script;

    let started = Instant::now();
    rt.run_until(limit, |rt| rt.recipe_complete())?;
    rt.shutdown();
    let mut report = RunReport::tally(&rt.log().read().expect("event log poisoned"));
    report.recipe_id = recipe_id.into();
    report.complete = rt.recipe_complete();
    report.sim_seconds = rt.time();
    report.wall_seconds = started.elapsed().as_secs_f64();
    report.final_state = rt.snapshot().engine_state.clone();
    Ok((rt, report))
}
