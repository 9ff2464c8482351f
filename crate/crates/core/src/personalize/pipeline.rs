use serde::{Deserialize, Serialize};

use super::{InvestorType, PersonalizeError};
use crate::mlcore::{
    accuracy, pca_fit, pca_top_features, standardize, stratified_split, Classifier, ClassifierKind, ClassifierParams,
    FeatureMatrix, PcaModel, Standardizer,
};
use crate::session::{DigitalFootprint, METRIC_NAMES};

pub const PIPELINE_FORMAT_VERSION: u32 = 1;

/// Footprints as a feature table in [`METRIC_NAMES`] order. Labels are attached when
/// every footprint carries one and dropped when none do.
pub fn build_training_table(footprints: &[DigitalFootprint]) -> Result<FeatureMatrix, PersonalizeError> {
    if footprints.is_empty() {
        return Err(PersonalizeError::Empty);
    }
    let labelled = footprints.iter().filter(|f| f.label.is_some()).count();
    if labelled != 0 && labelled != footprints.len() {
        return Err(PersonalizeError::Schema {
            field: "label",
            message: format!("{labelled} of {} footprints are labelled", footprints.len()),
        });
    }
    let mut values = Vec::with_capacity(footprints.len() * METRIC_NAMES.len());
    for (i, f) in footprints.iter().enumerate() {
        for (name, v) in METRIC_NAMES.iter().zip(f.metrics()) {
            if !v.is_finite() || v < 0.0 {
                return Err(PersonalizeError::Schema { field: name, message: format!("row {i} has value {v}") });
            }
            values.push(v);
        }
    }
    let labels = (labelled > 0).then(|| footprints.iter().map(|f| f.label.expect("checked").class_id()).collect());
    let names = METRIC_NAMES.iter().map(|s| s.to_string()).collect();
    Ok(FeatureMatrix::new(names, values, labels)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub pca_components: usize,
    pub top_features: usize,
    pub split_ratio: f64,
    /// Accuracy is averaged over splits seeded `0..n_splits`.
    pub n_splits: u64,
    pub classifiers: Vec<ClassifierParams>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pca_components: 2,
            top_features: 5,
            split_ratio: 0.7,
            n_splits: 10,
            classifiers: ClassifierKind::ALL.iter().map(|&k| ClassifierParams::default_for(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub params: ClassifierParams,
    /// Test accuracy of each split, in seed order.
    pub split_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Fitted on every row of the restricted table.
    pub model: Classifier,
}

/// Everything needed to score a raw footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub standardizer: Standardizer,
    pub pca: PcaModel,
    pub selected_features: Vec<String>,
    pub selected_index: Vec<usize>,
    pub classifiers: Vec<TrainedClassifier>,
}

impl PipelineModel {
    pub fn classifier(&self, kind: ClassifierKind) -> Option<&TrainedClassifier> {
        self.classifiers.iter().find(|c| c.model.kind() == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PersonalizeError> {
        let m: PipelineModel = serde_json::from_str(s).map_err(|e| PersonalizeError::Model(e.to_string()))?;
        if m.format_version != PIPELINE_FORMAT_VERSION {
            return Err(PersonalizeError::Model(format!("unsupported pipeline format_version {}", m.format_version)));
        }
        Ok(m)
    }

    /// Standardized, feature-selected view of a raw 17-metric row.
    pub fn features(&self, raw: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform_row(raw);
        self.selected_index.iter().map(|&j| z[j]).collect()
    }
}

fn stage<T>(name: &'static str, r: Result<T, crate::mlcore::MlError>) -> Result<T, PersonalizeError> {
    r.map_err(|source| PersonalizeError::Stage { stage: name, source })
}

/// standardize, PCA, top-feature selection, then each configured classifier.
pub fn train_pipeline(table: &FeatureMatrix, config: &PipelineConfig) -> Result<PipelineModel, PersonalizeError> {
    if config.classifiers.is_empty() {
        return Err(PersonalizeError::Config("no classifiers configured".into()));
    }
    if config.n_splits == 0 {
        return Err(PersonalizeError::Config("n_splits must be at least 1".into()));
    }
    let labels = stage("labels", table.require_labels())?.to_vec();
    let (z, standardizer) = stage("standardize", standardize(table))?;
    let pca = stage("pca", pca_fit(&z, config.pca_components))?;
    let selected_features = stage("feature selection", pca_top_features(&pca, config.top_features))?;
    let selected_index: Vec<usize> =
        selected_features.iter().map(|n| z.column_index(n).expect("selected from these columns")).collect();
    let restricted = z.select_columns(&selected_index);

    let splits = (0..config.n_splits)
        .map(|seed| stage("split", stratified_split(&labels, config.split_ratio, seed)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut classifiers = Vec::with_capacity(config.classifiers.len());
    for params in &config.classifiers {
        let mut split_accuracy = Vec::with_capacity(splits.len());
        for s in &splits {
            let (train, test) = s.apply(&restricted);
            let model = stage("fit", params.fit(&train))?;
            split_accuracy.push(stage("evaluate", accuracy(|r| model.predict(r), &test))?);
        }
        let mean_accuracy = split_accuracy.iter().sum::<f64>() / split_accuracy.len() as f64;
        let model = stage("fit", params.fit(&restricted))?;
        classifiers.push(TrainedClassifier { params: params.clone(), split_accuracy, mean_accuracy, model });
    }
    Ok(PipelineModel {
        format_version: PIPELINE_FORMAT_VERSION,
        config: config.clone(),
        standardizer,
        pca,
        selected_features,
        selected_index,
        classifiers,
    })
}

/// Predicted investor type and the classifier's probability for it.
pub fn predict_type(
    model: &PipelineModel,
    footprint: &DigitalFootprint,
    kind: ClassifierKind,
) -> Result<(InvestorType, f64), PersonalizeError> {
    let c = model.classifier(kind).ok_or(PersonalizeError::UnknownClassifier(kind))?;
    let (class, confidence) = c.model.predict_with_confidence(&model.features(&footprint.metrics()));
    let t = InvestorType::from_class_id(class)
        .ok_or_else(|| PersonalizeError::Model(format!("classifier produced unknown class {class}")))?;
    Ok((t, confidence.clamp(0.0, 1.0)))
}
