//! Numerical learners used by the personalization engine, all double precision and
//! deterministic given their inputs and seed.

mod classifier;
mod gbt;
mod kmeans;
mod matrix;
mod metrics;
mod mlp;
mod pca;
mod split;
mod standardize;
mod tree;

pub use classifier::{Classifier, ClassifierKind, ClassifierParams, ModelArtifact, ARTIFACT_FORMAT_VERSION};
pub use gbt::{gbt_fit, log_loss, GbtParams, GradientBoostedTrees, RegressionNode, RegressionTree};
pub use kmeans::{
    elbow_select, kmeans_fit, kmeans_fit_with, kmeans_from_centroids, ElbowResult, KMeansModel, DEFAULT_MAX_ITER,
    DEFAULT_N_INIT, DEFAULT_TOL,
};
pub use matrix::FeatureMatrix;
pub use metrics::accuracy;
pub use mlp::{mlp_fit, Activation, DenseLayer, Mlp, MlpParams};
pub use pca::{pca_fit, pca_top_features, PcaModel};
pub use split::{stratified_split, Split};
pub use standardize::{standardize, Standardizer};
pub use tree::{tree_fit, DecisionTree, TreeNode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}
