use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{metric_column, DescriptiveStats, EXPERIENCED_GROUP, NOVICE_GROUP};
use super::{descriptive_stats, group_of, welch_t_test, AnalyticsError};
use crate::mlcore::ClassifierKind;
use crate::personalize::{predict_type, PipelineModel};
use crate::session::{DigitalFootprint, METRIC_NAMES};

/// Welch tests below this p-value get a narrative sentence.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveEntry {
    pub id: String,
    pub name: String,
    pub value: f64,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferentialEntry {
    pub id: String,
    pub test: String,
    pub metric: String,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub groups: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeSentence {
    pub template: String,
    pub text: String,
    /// Ids of the entries the sentence quotes.
    pub refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightReport {
    pub cohort_id: String,
    pub generated_at: String,
    /// How labels were obtained: `true` or `predicted:<classifier>`.
    pub label_source: String,
    pub descriptive: Vec<DescriptiveEntry>,
    pub inferential: Vec<InferentialEntry>,
    pub narrative: Vec<NarrativeSentence>,
}

const TRAP_TEMPLATE: &str = "{pct}% of novice investors ({k} of {n}) bought at least one fraud stock.";
const DWELL_TEMPLATE: &str = "Experienced investors spent {ratio} times as long on the market page as novice investors.";
const DIFF_TEMPLATE: &str =
    "Novice and experienced investors differ in {metric} (Welch t = {t}, df = {df}, p = {p}).";
const MODEL_TEMPLATE: &str = "The {kind} classifier predicts investor type with mean test accuracy {acc}.";

fn fill(template: &str, values: &[(&str, String)]) -> Result<String, AnalyticsError> {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    if out.contains('{') || out.contains('}') {
        return Err(AnalyticsError::Report(format!("unbound placeholder in {out:?}")));
    }
    Ok(out)
}

impl InsightReport {
    pub fn entry(&self, id: &str) -> Option<&DescriptiveEntry> {
        self.descriptive.iter().find(|e| e.id == id)
    }

    pub fn test(&self, metric: &str) -> Option<&InferentialEntry> {
        self.inferential.iter().find(|e| e.metric == metric)
    }

    pub fn novice_trap_fraction(&self) -> Option<f64> {
        self.entry("novice.fraud_trap_fraction").map(|e| e.value)
    }

    pub fn market_dwell_ratio(&self) -> Option<f64> {
        self.entry("ratio.t_market_page").map(|e| e.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, AnalyticsError> {
        serde_json::from_str(s).map_err(|e| AnalyticsError::Report(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("Insight report: {}\nGenerated: {}\nLabels: {}\n\nFindings\n", self.cohort_id, self.generated_at, self.label_source);
        for s in &self.narrative {
            out.push_str(&format!("  - {}\n", s.text));
        }
        out.push_str("\nGroup statistics\n");
        for e in &self.descriptive {
            out.push_str(&format!("  {:<45} {:>12.4}\n", e.id, e.value));
        }
        if !self.inferential.is_empty() {
            out.push_str("\nWelch t-tests (novice vs experienced)\n");
            for e in &self.inferential {
                out.push_str(&format!("  {:<22} t = {:>8.3}  df = {:>6.2}  p = {:.4}\n", e.metric, e.statistic, e.df, e.p_value));
            }
        }
        out
    }
}

fn descriptive_entries(stats: &DescriptiveStats) -> Vec<DescriptiveEntry> {
    let mut out = Vec::new();
    for g in &stats.groups {
        let push = |out: &mut Vec<DescriptiveEntry>, name: String, value: f64| {
            out.push(DescriptiveEntry { id: format!("{}.{name}", g.group), name, value, group: g.group.clone() });
        };
        push(&mut out, "n".into(), g.n as f64);
        push(&mut out, "fraud_trap_fraction".into(), g.fraud_trap_fraction);
        for m in &g.metrics {
            push(&mut out, format!("{}.mean", m.metric), m.mean);
            push(&mut out, format!("{}.median", m.metric), m.median);
            push(&mut out, format!("{}.std", m.metric), m.std);
        }
    }
    for r in &stats.dwell_ratios {
        out.push(DescriptiveEntry {
            id: format!("ratio.{}", r.metric),
            name: format!("{}/{} {}", r.numerator, r.denominator, r.metric),
            value: r.ratio,
            group: format!("{}/{}", r.numerator, r.denominator),
        });
    }
    out
}

/// Descriptive and inferential statistics with templated findings. Unlabelled
/// footprints are labelled by `model`'s most accurate classifier when one is given.
pub fn build_report(
    footprints: &[DigitalFootprint],
    cohort_id: &str,
    model: Option<&PipelineModel>,
    generated_at: &str,
) -> Result<InsightReport, AnalyticsError> {
    let best = model.and_then(|m| {
        m.classifiers
            .iter()
            .fold(None, |b: Option<&crate::personalize::TrainedClassifier>, c| match b {
                Some(b) if b.mean_accuracy >= c.mean_accuracy => Some(b),
                _ => Some(c),
            })
            .map(|c| (m, c))
    });
    let mut label_source = "true".to_string();
    let labelled: Vec<DigitalFootprint> = footprints
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if f.label.is_none() {
                if let Some((m, c)) = best {
                    let kind = c.model.kind();
                    f.label = Some(predict_type(m, &f, kind).map_err(|e| AnalyticsError::Report(e.to_string()))?.0);
                    label_source = format!("predicted:{}", kind.short_name());
                }
            }
            Ok(f)
        })
        .collect::<Result<_, AnalyticsError>>()?;

    let stats = descriptive_stats(&labelled)?;
    let descriptive = descriptive_entries(&stats);
    let mut narrative = Vec::new();

    if let Some(g) = stats.group(NOVICE_GROUP) {
        let k = (g.fraud_trap_fraction * g.n as f64).round() as usize;
        narrative.push(NarrativeSentence {
            template: "novice_trap_fraction".into(),
            text: fill(TRAP_TEMPLATE, &[
                ("pct", format!("{:.0}", g.fraud_trap_fraction * 100.0)),
                ("k", k.to_string()),
                ("n", g.n.to_string()),
            ])?,
            refs: vec!["novice.fraud_trap_fraction".into(), "novice.n".into()],
        });
    }
    if let Some(r) = stats.dwell_ratio("t_market_page") {
        narrative.push(NarrativeSentence {
            template: "market_dwell_ratio".into(),
            text: fill(DWELL_TEMPLATE, &[("ratio", format!("{:.2}", r.ratio))])?,
            refs: vec!["ratio.t_market_page".into()],
        });
    }

    let mut inferential = Vec::new();
    let members = |g: &str| labelled.iter().filter(|f| group_of(f) == g).collect::<Vec<_>>();
    let (nov, exp) = (members(NOVICE_GROUP), members(EXPERIENCED_GROUP));
    if nov.len() >= 2 && exp.len() >= 2 {
        for (j, name) in METRIC_NAMES.iter().enumerate() {
            let Ok(w) = welch_t_test(&metric_column(&nov, j), &metric_column(&exp, j)) else {
                continue;
            };
            let id = format!("welch.{name}");
            if w.p_value < SIGNIFICANCE {
                narrative.push(NarrativeSentence {
                    template: "group_difference".into(),
                    text: fill(DIFF_TEMPLATE, &[
                        ("metric", name.to_string()),
                        ("t", format!("{:.2}", w.t)),
                        ("df", format!("{:.1}", w.df)),
                        ("p", format!("{:.4}", w.p_value)),
                    ])?,
                    refs: vec![id.clone()],
                });
            }
            inferential.push(InferentialEntry {
                id,
                test: "welch_t".into(),
                metric: name.to_string(),
                statistic: w.t,
                df: w.df,
                p_value: w.p_value,
                groups: [NOVICE_GROUP.into(), EXPERIENCED_GROUP.into()],
            });
        }
    }

    let mut descriptive = descriptive;
    if let Some(m) = model {
        for c in &m.classifiers {
            let kind: ClassifierKind = c.model.kind();
            let id = format!("model.{}.mean_accuracy", kind.short_name());
            descriptive.push(DescriptiveEntry { id: id.clone(), name: "mean_accuracy".into(), value: c.mean_accuracy, group: "model".into() });
            narrative.push(NarrativeSentence {
                template: "model_accuracy".into(),
                text: fill(MODEL_TEMPLATE, &[("kind", kind.short_name().into()), ("acc", format!("{:.3}", c.mean_accuracy))])?,
                refs: vec![id],
            });
        }
    }

    Ok(InsightReport {
        cohort_id: cohort_id.to_string(),
        generated_at: generated_at.to_string(),
        label_source,
        descriptive,
        inferential,
        narrative,
    })
}

/// Count of footprints per group label, for summaries.
pub fn group_sizes(footprints: &[DigitalFootprint]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for f in footprints {
        *m.entry(group_of(f)).or_insert(0) += 1;
    }
    m
}
