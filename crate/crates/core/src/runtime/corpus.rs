use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Runtime, RuntimeError};
use crate::api::{Ack, CommandKind, EventLog, RecipeStore};
use crate::config::Config;
use crate::labeling::SessionSummary;
use crate::plant::{ScriptEntry, ScriptEvent, SimScript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSession {
    pub id: String,
    pub segments: Vec<Segment>,
}

/// Scripted labeling sessions: each session shows the segments' milestones
/// in order while the operator keeps the matching label active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub recipe: String,
    pub sessions: Vec<CorpusSession>,
}

impl CorpusSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Records each session should produce at `cadence`.
    pub fn expected_records(&self, cadence: f64) -> Vec<u64> {
        self.sessions
            .iter()
            .map(|s| {
                s.segments
                    .iter()
                    .map(|seg| (seg.seconds / cadence).round() as u64)
                    .sum()
            })
            .collect()
    }
}

/// Drive one runtime per session, capturing into `root`.
pub fn run_corpus(
    spec: &CorpusSpec,
    config: &Config,
    recipes: &RecipeStore,
    root: &Path,
) -> Result<Vec<SessionSummary>, RuntimeError> {
    let mut summaries = Vec::new();
    for session in &spec.sessions {
        let mut config = config.clone();
        config.labeling.root = root.to_path_buf();
        let mut rt = Runtime::new(config, recipes.clone(), EventLog::in_memory().shared())?;
        let ack = rt.submit(
            CommandKind::LoadRecipe {
                id: spec.recipe.clone(),
            },
            "corpus",
        );
        if let Ack::Rejected { reason } = ack {
            return Err(RuntimeError::Rejected(reason));
        }

        let mut events = Vec::new();
        let mut t = 0.0;
        rt.schedule(
            0.0,
            CommandKind::StartSession {
                session_id: Some(session.id.clone()),
            },
            "corpus",
        );
        for seg in &session.segments {
            events.push(ScriptEntry {
                t,
                event: ScriptEvent::SetMilestone {
                    label: seg.label.clone(),
                },
            });
            rt.schedule(
                t,
                CommandKind::SetLabel {
                    label: seg.label.clone(),
                },
                "corpus",
            );
            t += seg.seconds;
        }
        rt.schedule(t, CommandKind::StopSession, "corpus");
        let script = SimScript { events };
        let recipe = recipes
            .get(&spec.recipe)
            .ok_or_else(|| RuntimeError::Rejected(format!("unknown recipe `{}`", spec.recipe)))?;
        script
            .validate(recipe.vocabulary())
            .map_err(|mut e| e.remove(0))?;
        rt.script = script;
        rt.run_until(t + 0.2, |rt| rt.session().is_none() && rt.time() > t)?;

        let log = rt.log().read().expect("event log poisoned");
        let summary = log
            .entries()
            .iter()
            .rev()
            .find(|e| e.payload["type"] == "session_stopped")
            .and_then(|e| serde_json::from_value::<SessionSummary>(e.payload["summary"].clone()).ok())
            .ok_or_else(|| RuntimeError::Rejected(format!("session {} did not stop", session.id)))?;
        summaries.push(summary);
    }
    Ok(summaries)
}
