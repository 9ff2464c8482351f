use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::personalize::InvestorType;
use crate::rng;
use crate::session::{DigitalFootprint, SessionId, METRIC_COUNT, METRIC_NAMES};

const DEFAULT_COHORT: &str = include_str!("../../assets/cohort.toml");
const DERIVED_METRIC: &str = "n_articles_read";
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDist {
    pub mean: f64,
    pub spread: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    /// Share of the group that buys at least one fraud stock, applied as an exact quota.
    pub fraud_trap_rate: f64,
    pub metrics: BTreeMap<String, MetricDist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub version: u32,
    pub id: String,
    pub n_total: usize,
    pub n_novice: usize,
    pub n_experienced: usize,
    pub seed: u64,
    pub novice: Archetype,
    pub experienced: Archetype,
}

impl CohortSpec {
    pub fn default_spec() -> Self {
        Self::from_toml(DEFAULT_COHORT).expect("bundled cohort spec is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, AnalyticsError> {
        let spec: CohortSpec = toml::from_str(text).map_err(|e| AnalyticsError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, AnalyticsError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AnalyticsError::Spec(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("cohort spec serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |m: String| Err(AnalyticsError::Spec(m));
        if self.version != 1 {
            return bad(format!("unsupported cohort spec version {}", self.version));
        }
        if self.n_novice + self.n_experienced != self.n_total {
            return bad(format!(
                "n_novice ({}) + n_experienced ({}) != n_total ({})",
                self.n_novice, self.n_experienced, self.n_total
            ));
        }
        for (group, a) in [("novice", &self.novice), ("experienced", &self.experienced)] {
            if !(0.0..=1.0).contains(&a.fraud_trap_rate) {
                return bad(format!("{group}.fraud_trap_rate must lie in [0, 1]"));
            }
            for name in a.metrics.keys() {
                if name == DERIVED_METRIC {
                    return bad(format!("{group}.{name} is derived from the read counts and cannot be drawn"));
                }
                if !METRIC_NAMES.contains(&name.as_str()) {
                    return bad(format!("{group}: unknown metric {name}"));
                }
            }
            for name in METRIC_NAMES.iter().filter(|n| **n != DERIVED_METRIC) {
                let Some(d) = a.metrics.get(*name) else {
                    return bad(format!("{group}: missing metric {name}"));
                };
                if ![d.mean, d.spread, d.floor].iter().all(|v| v.is_finite() && *v >= 0.0) {
                    return bad(format!("{group}.{name}: mean, spread and floor must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

fn truncated_normal(d: &MetricDist, r: &mut rng::SimRng) -> f64 {
    if d.spread == 0.0 {
        return d.mean.max(d.floor);
    }
    for _ in 0..MAX_REJECTIONS {
        let v = d.mean + d.spread * rng::standard_normal(r);
        if v >= d.floor {
            return v;
        }
    }
    d.floor
}

fn draw_member(a: &Archetype, trapped: bool, r: &mut rng::SimRng) -> [f64; METRIC_COUNT] {
    let mut m = [0.0; METRIC_COUNT];
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        if *name == DERIVED_METRIC {
            continue;
        }
        let d = &a.metrics[*name];
        let is_count = i == 0 || i >= 9;
        m[i] = if *name == "n_fraud_bought" {
            if trapped {
                truncated_normal(&MetricDist { floor: d.floor.max(1.0), ..*d }, r).round().max(1.0)
            } else {
                0.0
            }
        } else if is_count {
            truncated_normal(d, r).round().max(d.floor.ceil())
        } else {
            truncated_normal(d, r)
        };
    }
    let idx = |n: &str| METRIC_NAMES.iter().position(|x| *x == n).expect("known metric");
    m[idx(DERIVED_METRIC)] = m[idx("n_untrusted_read")] + m[idx("n_trusted_read")];
    let buys = m[idx("n_fake_bought")] + m[idx("n_fraud_bought")] + m[idx("n_real_bought")];
    let tx = idx("n_transactions");
    m[tx] = m[tx].max(buys);
    m
}

/// Labelled synthetic footprints: the novices first, then the experienced investors.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<DigitalFootprint>, AnalyticsError> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let mut out = Vec::with_capacity(spec.n_total);
    for (t, a, n) in [
        (InvestorType::Novice, &spec.novice, spec.n_novice),
        (InvestorType::EXPERIENCED, &spec.experienced, spec.n_experienced),
    ] {
        let quota = (a.fraud_trap_rate * n as f64).round() as usize;
        let mut trapped: Vec<bool> = (0..n).map(|i| i < quota).collect();
        rng::shuffle(&mut trapped, &mut r);
        for flag in trapped {
            let metrics = draw_member(a, flag, &mut r);
            let mut f = DigitalFootprint::from_metrics(&metrics)
                .map_err(|e| AnalyticsError::Spec(format!("generated an invalid footprint: {e}")))?;
            f.session_id = Some(SessionId::new(format!("{}-{:03}", spec.id, out.len() + 1)));
            f.label = Some(t);
            out.push(f);
        }
    }
    Ok(out)
}
