use std::collections::BTreeMap;

use rand::Rng;

use super::{PlantError, PlantState};
use crate::perception::ConfidenceVector;

/// Simulated classifier output: the visible label gets a confidence drawn
/// from `[1 − noise, 1]` and the remainder is spread at random over the
/// other labels, so the vector always sums to one.
pub fn ground_truth_confidences<R: Rng + ?Sized>(
    state: &PlantState,
    vocabulary: &[String],
    noise: f64,
    rng: &mut R,
) -> Result<ConfidenceVector, PlantError> {
    if vocabulary.is_empty() {
        return Err(PlantError::Classifier("empty vocabulary".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(PlantError::Classifier(format!("noise {noise} outside [0, 1]")));
    }
    let truth = state.visible_label(vocabulary);
    if !vocabulary.iter().any(|l| l == truth) {
        return Err(PlantError::Classifier(format!(
            "milestone `{truth}` not in vocabulary"
        )));
    }

    let top = if noise > 0.0 {
        1.0 - noise * rng.random::<f64>()
    } else {
        1.0
    };
    let others: Vec<&String> = vocabulary.iter().filter(|l| *l != truth).collect();
    let mut scores = BTreeMap::new();
    if others.is_empty() {
        scores.insert(truth.to_string(), 1.0);
    } else {
        let remainder = 1.0 - top;
        let weights: Vec<f64> = others.iter().map(|_| rng.random::<f64>() + 1e-12).collect();
        let total: f64 = weights.iter().sum();
        for (label, w) in others.iter().zip(&weights) {
            scores.insert((*label).clone(), remainder * w / total);
        }
        scores.insert(truth.to_string(), top);
    }
    Ok(ConfidenceVector {
        timestamp: state.time,
        scores,
    })
}
