//! HTTP service, persistence and scripted bots for the trading simulator.

pub mod api;
pub mod bots;
pub mod error;
pub mod service;
pub mod store;

pub use api::{router, serve};
pub use error::ApiError;
pub use service::{Service, ServiceConfig};
pub use store::{EventStore, FileStore, MemoryStore};
