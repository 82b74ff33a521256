//! Multi-round Delphi panels.
//!
//! A [`DelphiProcess`] walks an ordered list of offline and online steps.
//! Each online step is a [`Round`] in which enrolled panelists rate
//! statements on a 1..=9 scale. Closed rounds are [`aggregate`]d with
//! Tukey hinges; statements without consensus are carried into the next
//! round together with anonymized feedback.

mod csv_export;
mod process;
mod round;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_export::{decimal, stats_csv, CSV_HEADER};
pub use process::{DelphiProcess, ProcessStatus, Recommendation, Step, StepPlan};
pub use round::{
    aggregate, carry_forward, Feedback, Response, Round, RoundStatus, Statement, SubmitOutcome,
    DEFAULT_SCALE_MAX,
};
pub use stats::{statement_stats, tukey_summary, Rational, StatementStats, Verdict, MAX_CONSENSUS_IQR, MIN_AGREEMENT};

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(PanelistId);
string_id!(StatementId);
string_id!(RoundId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelistCategory {
    PolicyMaker,
    Researcher,
    ScienceMuseum,
    School,
    Citizen,
    Custom(String),
}

impl fmt::Display for PanelistCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PanelistCategory::PolicyMaker => f.write_str("policy maker"),
            PanelistCategory::Researcher => f.write_str("researcher"),
            PanelistCategory::ScienceMuseum => f.write_str("science museum"),
            PanelistCategory::School => f.write_str("school"),
            PanelistCategory::Citizen => f.write_str("citizen"),
            PanelistCategory::Custom(label) => f.write_str(label),
        }
    }
}

impl FromStr for PanelistCategory {
    type Err = DelphiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['_', '-'], " ");
        Ok(match norm.as_str() {
            "" => return Err(DelphiError::EmptyCategory),
            "policy maker" => PanelistCategory::PolicyMaker,
            "researcher" => PanelistCategory::Researcher,
            "science museum" => PanelistCategory::ScienceMuseum,
            "school" => PanelistCategory::School,
            "citizen" => PanelistCategory::Citizen,
            _ => PanelistCategory::Custom(s.trim().to_owned()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panelist {
    pub id: PanelistId,
    pub category: PanelistCategory,
}

impl Panelist {
    pub fn new(id: &str, category: PanelistCategory) -> Result<Self, DelphiError> {
        if let PanelistCategory::Custom(label) = &category {
            if label.trim().is_empty() {
                return Err(DelphiError::EmptyCategory);
            }
        }
        Ok(Self {
            id: PanelistId(id.to_owned()),
            category,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelphiError {
    #[error("a process needs at least one online round")]
    NoOnlineRound,
    #[error("step order violation: {0}")]
    StepOrderViolation(String),
    #[error("a round needs at least one statement")]
    EmptyStatements,
    #[error("a round needs at least one panelist")]
    EmptyPanel,
    #[error("duplicate statement id {0}")]
    DuplicateStatement(StatementId),
    #[error("round is closed")]
    RoundClosed,
    #[error("round is still open")]
    RoundStillOpen,
    #[error("panelist {0} is not enrolled")]
    NotEnrolled(PanelistId),
    #[error("unknown statement {0}")]
    UnknownStatement(StatementId),
    #[error("rating {rating} outside 1..={max}")]
    RatingOutOfRange { rating: u8, max: u8 },
    #[error("statement {0} has no ratings")]
    UnratedStatement(StatementId),
    #[error("every statement reached consensus; nothing to carry forward")]
    NothingToCarry,
    #[error("process is not complete")]
    ProcessIncomplete,
    #[error("panelist category must not be empty")]
    EmptyCategory,
    #[error("invalid scale maximum {0}")]
    InvalidScale(u8),
}

impl DelphiError {
    pub fn name(&self) -> &'static str {
        match self {
            DelphiError::NoOnlineRound => "NoOnlineRound",
            DelphiError::StepOrderViolation(_) => "StepOrderViolation",
            DelphiError::EmptyStatements => "EmptyStatements",
            DelphiError::EmptyPanel => "EmptyPanel",
            DelphiError::DuplicateStatement(_) => "DuplicateStatement",
            DelphiError::RoundClosed => "RoundClosed",
            DelphiError::RoundStillOpen => "RoundStillOpen",
            DelphiError::NotEnrolled(_) => "NotEnrolled",
            DelphiError::UnknownStatement(_) => "UnknownStatement",
            DelphiError::RatingOutOfRange { .. } => "RatingOutOfRange",
            DelphiError::UnratedStatement(_) => "UnratedStatement",
            DelphiError::NothingToCarry => "NothingToCarry",
            DelphiError::ProcessIncomplete => "ProcessIncomplete",
            DelphiError::EmptyCategory => "EmptyCategory",
            DelphiError::InvalidScale(_) => "InvalidScale",
        }
    }
}
