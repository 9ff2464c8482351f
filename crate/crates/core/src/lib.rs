//! Fraud-awareness learning platform core.
//!
//! * [`simkit`] market world with pump-and-dump and fabricated listings
//! * [`session`] portfolios, telemetry events and the digital footprint fold
//! * [`mlcore`] standardization, PCA, k-means, trees, boosting and an MLP
//! * [`personalize`] investor-type prediction and knowledge-pool resource selection
//! * [`analytics`] synthetic cohorts, descriptive and inferential statistics, insight reports

pub mod analytics;
pub mod mlcore;
pub mod money;
pub mod rng;
pub mod personalize;
pub mod session;
pub mod simkit;

pub use money::Money;
pub use analytics::{CohortSpec, InsightReport};
pub use mlcore::{ClassifierKind, FeatureMatrix, MlError};
pub use personalize::{FeedbackBundle, InvestorType, KnowledgePool, PipelineModel};
pub use session::{DigitalFootprint, SessionEvent, SessionId};
pub use simkit::{Authenticity, Scenario, ScenarioConfig, StockId};
