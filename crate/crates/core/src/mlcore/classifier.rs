use serde::{Deserialize, Serialize};

use super::{gbt_fit, mlp_fit, tree_fit, DecisionTree, FeatureMatrix, GbtParams, GradientBoostedTrees, MlError, Mlp, MlpParams};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    DecisionTree,
    GradientBoostedTrees,
    Perceptron,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] =
        [ClassifierKind::DecisionTree, ClassifierKind::GradientBoostedTrees, ClassifierKind::Perceptron];

    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "DecisionTree",
            ClassifierKind::GradientBoostedTrees => "GBT",
            ClassifierKind::Perceptron => "MLP",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, MlError> {
        match s.to_ascii_lowercase().as_str() {
            "decisiontree" | "decision_tree" | "dt" | "tree" => Ok(ClassifierKind::DecisionTree),
            "gradientboostedtrees" | "gradient_boosted_trees" | "gbt" => Ok(ClassifierKind::GradientBoostedTrees),
            "perceptron" | "mlp" => Ok(ClassifierKind::Perceptron),
            _ => Err(MlError::InvalidInput(format!("unknown classifier kind {s:?}"))),
        }
    }
}

/// Hyperparameters for one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassifierParams {
    DecisionTree { max_depth: Option<usize>, min_leaf: usize },
    GradientBoostedTrees(GbtParams),
    Perceptron(MlpParams),
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::DecisionTree { .. } => ClassifierKind::DecisionTree,
            ClassifierParams::GradientBoostedTrees(_) => ClassifierKind::GradientBoostedTrees,
            ClassifierParams::Perceptron(_) => ClassifierKind::Perceptron,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::DecisionTree => ClassifierParams::DecisionTree { max_depth: Some(3), min_leaf: 1 },
            ClassifierKind::GradientBoostedTrees => ClassifierParams::GradientBoostedTrees(GbtParams::default()),
            ClassifierKind::Perceptron => ClassifierParams::Perceptron(MlpParams::default()),
        }
    }

    pub fn fit(&self, x: &FeatureMatrix) -> Result<Classifier, MlError> {
        Ok(match self {
            ClassifierParams::DecisionTree { max_depth, min_leaf } => {
                Classifier::DecisionTree(tree_fit(x, *max_depth, *min_leaf)?)
            }
            ClassifierParams::GradientBoostedTrees(p) => Classifier::GradientBoostedTrees(gbt_fit(x, p)?),
            ClassifierParams::Perceptron(p) => Classifier::Perceptron(mlp_fit(x, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classifier {
    DecisionTree(DecisionTree),
    GradientBoostedTrees(GradientBoostedTrees),
    Perceptron(Mlp),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::DecisionTree(_) => ClassifierKind::DecisionTree,
            Classifier::GradientBoostedTrees(_) => ClassifierKind::GradientBoostedTrees,
            Classifier::Perceptron(_) => ClassifierKind::Perceptron,
        }
    }

    /// Predicted class and the model's probability for it.
    pub fn predict_with_confidence(&self, row: &[f64]) -> (usize, f64) {
        match self {
            Classifier::DecisionTree(m) => m.predict_with_confidence(row),
            Classifier::GradientBoostedTrees(m) => m.predict_with_confidence(row),
            Classifier::Perceptron(m) => m.predict_with_confidence(row),
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.predict_with_confidence(row).0
    }
}

/// Versioned on-disk wrapper around a trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub col_names: Vec<String>,
    pub model: Classifier,
}

impl ModelArtifact {
    pub fn new(col_names: Vec<String>, model: Classifier) -> Self {
        Self { format_version: ARTIFACT_FORMAT_VERSION, col_names, model }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, MlError> {
        let a: ModelArtifact = serde_json::from_str(s).map_err(|e| MlError::Parse(e.to_string()))?;
        if a.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(MlError::Parse(format!("unsupported artifact format_version {}", a.format_version)));
        }
        Ok(a)
    }
}
