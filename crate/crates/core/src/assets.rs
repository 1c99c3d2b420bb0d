//! Reference inputs shipped with the crate.

use crate::plant::SimScript;
use crate::runtime::CorpusSpec;

/// Plant script for the composite pasta and tomato sauce validation run.
pub const VALIDATION_SCRIPT: &str = include_str!("../assets/scripts/validation.json");
pub const PASTA_CORPUS: &str = include_str!("../assets/corpus/pasta.json");
pub const TOMATO_SAUCE_CORPUS: &str = include_str!("../assets/corpus/tomato_sauce.json");

pub fn validation_script() -> SimScript {
    SimScript::from_json(VALIDATION_SCRIPT).expect("bundled script is valid")
}

pub fn corpus(recipe: &str) -> Option<CorpusSpec> {
    let text = match recipe {
        "pasta" => PASTA_CORPUS,
        "tomato_sauce" => TOMATO_SAUCE_CORPUS,
        _ => return None,
    };
    Some(CorpusSpec::from_json(text).expect("bundled corpus is valid"))
}
