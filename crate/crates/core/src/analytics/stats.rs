use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::AnalyticsError;
use crate::session::{DigitalFootprint, METRIC_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single member.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub n: usize,
    /// Set when the group is too small for a spread estimate.
    pub degenerate: bool,
    /// Share of members with `n_fraud_bought >= 1`.
    pub fraud_trap_fraction: f64,
    pub metrics: Vec<MetricSummary>,
}

impl GroupStats {
    pub fn summary(&self, metric: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellRatio {
    pub metric: String,
    pub numerator: String,
    pub denominator: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub groups: Vec<GroupStats>,
    /// Experienced over novice mean for every duration metric, when both groups exist
    /// and the novice mean is positive.
    pub dwell_ratios: Vec<DwellRatio>,
}

impl DescriptiveStats {
    pub fn group(&self, name: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn dwell_ratio(&self, metric: &str) -> Option<&DwellRatio> {
        self.dwell_ratios.iter().find(|d| d.metric == metric)
    }
}

pub const NOVICE_GROUP: &str = "novice";
pub const EXPERIENCED_GROUP: &str = "experienced";
pub const ALL_GROUP: &str = "all";

/// Group key: the binary investor class, or `all` for unlabelled footprints.
pub fn group_of(f: &DigitalFootprint) -> &'static str {
    match f.label {
        Some(t) if t.is_novice() => NOVICE_GROUP,
        Some(_) => EXPERIENCED_GROUP,
        None => ALL_GROUP,
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample variance (divisor n - 1).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn metric_column(footprints: &[&DigitalFootprint], metric: usize) -> Vec<f64> {
    footprints.iter().map(|f| f.metrics()[metric]).collect()
}

/// Per-group mean, median and std of every metric, plus trap fractions and dwell ratios.
pub fn descriptive_stats(footprints: &[DigitalFootprint]) -> Result<DescriptiveStats, AnalyticsError> {
    if footprints.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut by_group: BTreeMap<&str, Vec<&DigitalFootprint>> = BTreeMap::new();
    for f in footprints {
        by_group.entry(group_of(f)).or_default().push(f);
    }
    let order = [NOVICE_GROUP, EXPERIENCED_GROUP, ALL_GROUP];
    let groups: Vec<GroupStats> = order
        .iter()
        .filter_map(|g| by_group.get(g).map(|members| (*g, members)))
        .map(|(g, members)| GroupStats {
            group: g.to_string(),
            n: members.len(),
            degenerate: members.len() < 2,
            fraud_trap_fraction: members.iter().filter(|f| f.n_fraud_bought >= 1).count() as f64
                / members.len() as f64,
            metrics: METRIC_NAMES
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let col = metric_column(members, j);
                    MetricSummary { metric: name.to_string(), mean: mean(&col), median: median(&col), std: variance(&col).sqrt() }
                })
                .collect(),
        })
        .collect();
    let mut dwell_ratios = Vec::new();
    if let (Some(n), Some(e)) = (by_group.get(NOVICE_GROUP), by_group.get(EXPERIENCED_GROUP)) {
        for (j, name) in METRIC_NAMES.iter().enumerate().filter(|(_, n)| n.starts_with("t_")) {
            let (num, den) = (mean(&metric_column(e, j)), mean(&metric_column(n, j)));
            if den > 0.0 {
                dwell_ratios.push(DwellRatio {
                    metric: name.to_string(),
                    numerator: EXPERIENCED_GROUP.into(),
                    denominator: NOVICE_GROUP.into(),
                    ratio: num / den,
                });
            }
        }
    }
    Ok(DescriptiveStats { groups, dwell_ratios })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch t-test for a difference in means.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, AnalyticsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(AnalyticsError::Stats(format!(
            "welch test needs at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (variance(a) / na, variance(b) / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(WelchResult { t: 0.0, df: na + nb - 2.0, p_value: 1.0 });
        }
        return Err(AnalyticsError::Stats("both groups have zero variance and different means".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2.powi(2) / (sa.powi(2) / (na - 1.0) + sb.powi(2) / (nb - 1.0));
    let p_value = if t == 0.0 { 1.0 } else { beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0) };
    Ok(WelchResult { t, df, p_value })
}
