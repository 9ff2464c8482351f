//! Deterministic market world: listings and their price processes, news and chat.

mod config;
mod price;
mod scenario;
mod types;

pub use config::*;
pub use price::{delist_fake, step_fraud_price, step_real_price};
pub use scenario::generate_scenario;
pub use types::*;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("scenario config error: {0}")]
    Config(String),
    #[error("scenario config parse error: {0}")]
    Parse(String),
}
