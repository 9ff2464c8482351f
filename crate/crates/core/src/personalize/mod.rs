//! Investor-type prediction and knowledge-pool resource selection.

mod feedback;
mod pipeline;
mod pool;
mod types;

pub use feedback::{feedback_loop, FeedbackLoop, FeedbackRun, DEFAULT_FEEDBACK_CADENCE};
pub use pipeline::{
    build_training_table, predict_type, train_pipeline, PipelineConfig, PipelineModel, TrainedClassifier,
    PIPELINE_FORMAT_VERSION,
};
pub use pool::{make_bundle, select_resources, KnowledgePool, PoolEntry};
pub use types::*;

use crate::mlcore::{ClassifierKind, MlError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PersonalizeError {
    #[error("no footprints supplied")]
    Empty,
    #[error("schema error in {field}: {message}")]
    Schema { field: &'static str, message: String },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: MlError,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("pool: {0}")]
    Pool(String),
    #[error("model: {0}")]
    Model(String),
    #[error("model has no {0:?} classifier")]
    UnknownClassifier(ClassifierKind),
}

impl From<MlError> for PersonalizeError {
    fn from(source: MlError) -> Self {
        PersonalizeError::Stage { stage: "table", source }
    }
}
