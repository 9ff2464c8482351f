//! Per-user live state and the telemetry that becomes the digital footprint.

mod event;
mod footprint;
mod log;
mod portfolio;
mod state;
mod xp;

pub use event::*;
pub use footprint::*;
pub use log::*;
pub use portfolio::*;
pub use state::*;
pub use xp::*;
