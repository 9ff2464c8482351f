use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeedbackBundle, GameDesignElement, InvestorType, PersonalizeError};
use crate::session::SessionId;
use crate::simkit::{Difficulty, ScamTag};

const DEFAULT_POOL: &str = include_str!("../../assets/pool.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    #[serde(rename = "type")]
    pub investor_type: InvestorType,
    pub elements: Vec<GameDesignElement>,
    pub scams: Vec<ScamTag>,
    pub difficulty: Difficulty,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolFile {
    version: String,
    entry: Vec<PoolEntry>,
}

/// Validated mapping from every investor type to its resources.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgePool {
    version: String,
    entries: BTreeMap<InvestorType, PoolEntry>,
}

impl KnowledgePool {
    pub fn default_pool() -> Self {
        Self::from_toml(DEFAULT_POOL).expect("bundled pool is valid")
    }

    pub fn load(path: &Path) -> Result<Self, PersonalizeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PersonalizeError::Pool(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, PersonalizeError> {
        let file: PoolFile = toml::from_str(text).map_err(|e| PersonalizeError::Pool(e.to_string()))?;
        if file.version != "1" {
            return Err(PersonalizeError::Pool(format!("unsupported pool version {:?}", file.version)));
        }
        let mut entries = BTreeMap::new();
        for e in file.entry {
            if e.elements.is_empty() {
                return Err(PersonalizeError::Pool(format!("{} has no game-design elements", e.investor_type)));
            }
            if let Some(prev) = entries.insert(e.investor_type, e) {
                return Err(PersonalizeError::Pool(format!("duplicate entry for {}", prev.investor_type)));
            }
        }
        let missing: Vec<String> =
            InvestorType::all().into_iter().filter(|t| !entries.contains_key(t)).map(|t| t.to_string()).collect();
        if !missing.is_empty() {
            return Err(PersonalizeError::Pool(format!("no entry for {}", missing.join(", "))));
        }
        Ok(KnowledgePool { version: file.version, entries })
    }

    pub fn to_toml(&self) -> String {
        let file = PoolFile { version: self.version.clone(), entry: self.entries.values().cloned().collect() };
        toml::to_string(&file).expect("pool serializes")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn entries(&self) -> impl Iterator<Item = &PoolEntry> {
        self.entries.values()
    }

    pub fn entry(&self, t: InvestorType) -> &PoolEntry {
        &self.entries[&t]
    }
}

/// The pool entry for `t`, verbatim.
pub fn select_resources(pool: &KnowledgePool, t: InvestorType) -> PoolEntry {
    pool.entry(t).clone()
}

pub fn make_bundle(
    pool: &KnowledgePool,
    session_id: Option<SessionId>,
    t: InvestorType,
    confidence: f64,
) -> FeedbackBundle {
    let e = select_resources(pool, t);
    FeedbackBundle {
        session_id,
        predicted_type: t,
        confidence,
        elements: e.elements,
        scams: e.scams,
        difficulty: e.difficulty,
    }
}
