//! Synthetic cohorts, descriptive and inferential statistics, and insight reports.

mod cohort;
mod report;
mod stats;

pub use cohort::{generate_cohort, Archetype, CohortSpec, MetricDist};
pub use report::{
    build_report, group_sizes, DescriptiveEntry, InferentialEntry, InsightReport, NarrativeSentence, SIGNIFICANCE,
};
pub use stats::{
    descriptive_stats, group_of, mean, median, variance, welch_t_test, DescriptiveStats, DwellRatio, GroupStats,
    MetricSummary, WelchResult, ALL_GROUP, EXPERIENCED_GROUP, NOVICE_GROUP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no footprints supplied")]
    Empty,
    #[error("cohort spec: {0}")]
    Spec(String),
    #[error("statistics: {0}")]
    Stats(String),
    #[error("report: {0}")]
    Report(String),
}
