use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::session::SessionId;
use crate::simkit::{Difficulty, ScamTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperiencedSubtype {
    RiskIntolerant,
    Confident,
    LossAverseYoung,
    ConservativeLongTerm,
}

impl ExperiencedSubtype {
    pub const ALL: [ExperiencedSubtype; 4] = [
        ExperiencedSubtype::RiskIntolerant,
        ExperiencedSubtype::Confident,
        ExperiencedSubtype::LossAverseYoung,
        ExperiencedSubtype::ConservativeLongTerm,
    ];

    fn slug(self) -> &'static str {
        match self {
            ExperiencedSubtype::RiskIntolerant => "risk_intolerant",
            ExperiencedSubtype::Confident => "confident",
            ExperiencedSubtype::LossAverseYoung => "loss_averse_young",
            ExperiencedSubtype::ConservativeLongTerm => "conservative_long_term",
        }
    }
}

/// Investor taxonomy. Written as `novice`, `experienced` or `experienced/<subtype>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum InvestorType {
    Novice,
    Experienced(Option<ExperiencedSubtype>),
}

impl InvestorType {
    pub const EXPERIENCED: InvestorType = InvestorType::Experienced(None);

    /// Every type a knowledge pool must cover.
    pub fn all() -> Vec<InvestorType> {
        let mut v = vec![InvestorType::Novice, InvestorType::EXPERIENCED];
        v.extend(ExperiencedSubtype::ALL.iter().map(|s| InvestorType::Experienced(Some(*s))));
        v
    }

    /// Binary class id used by the classifiers: 0 novice, 1 experienced.
    pub fn class_id(self) -> usize {
        match self {
            InvestorType::Novice => 0,
            InvestorType::Experienced(_) => 1,
        }
    }

    pub fn from_class_id(id: usize) -> Option<Self> {
        match id {
            0 => Some(InvestorType::Novice),
            1 => Some(InvestorType::EXPERIENCED),
            _ => None,
        }
    }

    pub fn is_novice(self) -> bool {
        self == InvestorType::Novice
    }
}

impl fmt::Display for InvestorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvestorType::Novice => f.write_str("novice"),
            InvestorType::Experienced(None) => f.write_str("experienced"),
            InvestorType::Experienced(Some(s)) => write!(f, "experienced/{}", s.slug()),
        }
    }
}

impl FromStr for InvestorType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "novice" => Ok(InvestorType::Novice),
            "experienced" => Ok(InvestorType::EXPERIENCED),
            other => {
                let sub = other
                    .strip_prefix("experienced/")
                    .and_then(|slug| ExperiencedSubtype::ALL.into_iter().find(|s| s.slug() == slug));
                sub.map(|s| InvestorType::Experienced(Some(s)))
                    .ok_or_else(|| format!("unknown investor type {other:?}"))
            }
        }
    }
}

impl From<InvestorType> for String {
    fn from(t: InvestorType) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for InvestorType {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motivation {
    Extrinsic,
    Intrinsic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameDesignElement {
    Badges,
    Collections,
    ContentUnlocking,
    Leaderboards,
    Quests,
    Points,
    SocialGraph,
    Teams,
    VirtualGoods,
    PerformanceContingentRewards,
    CompetenceRelatedAwards,
    UnexpectedAwards,
}

impl GameDesignElement {
    pub const ALL: [GameDesignElement; 12] = [
        GameDesignElement::Badges,
        GameDesignElement::Collections,
        GameDesignElement::ContentUnlocking,
        GameDesignElement::Leaderboards,
        GameDesignElement::Quests,
        GameDesignElement::Points,
        GameDesignElement::SocialGraph,
        GameDesignElement::Teams,
        GameDesignElement::VirtualGoods,
        GameDesignElement::PerformanceContingentRewards,
        GameDesignElement::CompetenceRelatedAwards,
        GameDesignElement::UnexpectedAwards,
    ];

    /// Elements in both the extrinsic and intrinsic lists are `Both`.
    pub fn motivation(self) -> Motivation {
        use GameDesignElement::*;
        match self {
            Quests | ContentUnlocking | PerformanceContingentRewards => Motivation::Both,
            CompetenceRelatedAwards | UnexpectedAwards => Motivation::Intrinsic,
            Badges | Collections | Leaderboards | Points | SocialGraph | Teams | VirtualGoods => {
                Motivation::Extrinsic
            }
        }
    }
}

/// Personalization output delivered to the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackBundle {
    pub session_id: Option<SessionId>,
    pub predicted_type: InvestorType,
    pub confidence: f64,
    pub elements: Vec<GameDesignElement>,
    pub scams: Vec<ScamTag>,
    pub difficulty: Difficulty,
}
