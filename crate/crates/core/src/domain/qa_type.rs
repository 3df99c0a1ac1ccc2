use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The nine question templates of the screening benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaType {
    Trr1,
    Trr2,
    Trr3,
    Tir1,
    Tir2,
    Tir3,
    Mir1,
    Mir2,
    Mir3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    TemporalRelational,
    TimepointIndexed,
    MultifacetedIntegrative,
}

impl QaType {
    pub const ALL: [QaType; 9] = [
        QaType::Trr1,
        QaType::Trr2,
        QaType::Trr3,
        QaType::Tir1,
        QaType::Tir2,
        QaType::Tir3,
        QaType::Mir1,
        QaType::Mir2,
        QaType::Mir3,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            QaType::Trr1 => "trr1",
            QaType::Trr2 => "trr2",
            QaType::Trr3 => "trr3",
            QaType::Tir1 => "tir1",
            QaType::Tir2 => "tir2",
            QaType::Tir3 => "tir3",
            QaType::Mir1 => "mir1",
            QaType::Mir2 => "mir2",
            QaType::Mir3 => "mir3",
        }
    }

    pub fn category(self) -> Category {
        match self {
            QaType::Trr1 | QaType::Trr2 | QaType::Trr3 => Category::TemporalRelational,
            QaType::Tir1 | QaType::Tir2 | QaType::Tir3 => Category::TimepointIndexed,
            QaType::Mir1 | QaType::Mir2 | QaType::Mir3 => Category::MultifacetedIntegrative,
        }
    }
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::TemporalRelational,
        Category::TimepointIndexed,
        Category::MultifacetedIntegrative,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::TemporalRelational => "Temporal Relational",
            Category::TimepointIndexed => "Timepoint Indexed",
            Category::MultifacetedIntegrative => "Multifaceted Integrative",
        }
    }
}

impl fmt::Display for QaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for QaType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        QaType::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| Error::validation(format!("unknown question type {s:?}")))
    }
}
