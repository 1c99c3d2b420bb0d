//! Service-facing types and the HTTP surface.

mod command;
pub mod http;
mod log;
mod store;
mod telemetry;

pub use command::{Ack, Command, CommandKind};
pub use log::{EventLog, EventLogEntry, LogCategory, LogQuery, SharedLog};
pub use store::{RecipeStore, RecipeSummary};
pub use telemetry::{Health, HealthStatus, TelemetrySnapshot, Warning};
pub use http::{router, AppState, ControlLoop, Service};
