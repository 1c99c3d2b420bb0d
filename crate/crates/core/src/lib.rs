//! Runtime for a hob that follows a recipe: a simulated plant, heat
//! control, milestone perception, the recipe state machine, dataset
//! labeling and an HTTP service tying them together.

pub mod api;
pub mod assets;
pub mod config;
pub mod control;
pub mod labeling;
pub mod perception;
pub mod plant;
pub mod recipe;
pub mod runtime;

pub use config::Config;
pub use runtime::Runtime;
