//! Participation typology: functions, the ten paradigms and component kinds.

mod classify;
mod entry;
mod load;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify, compose, ParadigmProfile};
pub use entry::{validate_entry, CatalogEntry, ComponentRef, ToolKind, Violation};
pub use load::{Catalog, Paradigm, SHIPPED_CATALOG};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("catalog must list exactly 10 paradigms, found {0}")]
    WrongCount(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("paradigm {0} listed twice")]
    DuplicateParadigm(ParadigmId),
    #[error("paradigm {0} has an empty signature")]
    EmptySignature(ParadigmId),
    #[error("unknown paradigm {0}")]
    UnknownParadigm(String),
    #[error("unknown subfunction {0}")]
    UnknownSubfunction(String),
    #[error("feature set is empty")]
    EmptyFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Function {
    Telling,
    Enacting,
    Making,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subfunction {
    Receive,
    Provide,
    Discuss,
    Deliberate,
    Propose,
    Vote,
    ShareProjects,
    CoDesign,
    CollectiveProblemSolving,
    ShareGoods,
}

impl Subfunction {
    pub const ALL: [Subfunction; 10] = [
        Subfunction::Receive,
        Subfunction::Provide,
        Subfunction::Discuss,
        Subfunction::Deliberate,
        Subfunction::Propose,
        Subfunction::Vote,
        Subfunction::ShareProjects,
        Subfunction::CoDesign,
        Subfunction::CollectiveProblemSolving,
        Subfunction::ShareGoods,
    ];

    pub fn function(self) -> Function {
        use Subfunction::*;
        match self {
            Receive | Provide => Function::Telling,
            Discuss | Deliberate | Propose | Vote => Function::Enacting,
            ShareProjects | CoDesign | CollectiveProblemSolving | ShareGoods => Function::Making,
        }
    }

    pub fn name(self) -> &'static str {
        use Subfunction::*;
        match self {
            Receive => "Receive",
            Provide => "Provide",
            Discuss => "Discuss",
            Deliberate => "Deliberate",
            Propose => "Propose",
            Vote => "Vote",
            ShareProjects => "ShareProjects",
            CoDesign => "CoDesign",
            CollectiveProblemSolving => "CollectiveProblemSolving",
            ShareGoods => "ShareGoods",
        }
    }
}

impl fmt::Display for Subfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subfunction {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Subfunction::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CatalogError::UnknownSubfunction(s.to_owned()))
    }
}

/// A subfunction under its parent function. Deserialized tags may pair a
/// subfunction with the wrong function; see [`FunctionTag::is_well_formed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionTag {
    pub function: Function,
    pub sub: Subfunction,
}

impl FunctionTag {
    pub fn of(sub: Subfunction) -> Self {
        Self {
            function: sub.function(),
            sub,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.sub.function() == self.function
    }
}

impl From<Subfunction> for FunctionTag {
    fn from(sub: Subfunction) -> Self {
        Self::of(sub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum ParadigmId {
    INIP,
    AST,
    CODI,
    DIREP,
    REP,
    COST,
    SHAGO,
    MAP,
    CODE,
    COPS,
}

impl ParadigmId {
    pub const ALL: [ParadigmId; 10] = [
        ParadigmId::INIP,
        ParadigmId::AST,
        ParadigmId::CODI,
        ParadigmId::DIREP,
        ParadigmId::REP,
        ParadigmId::COST,
        ParadigmId::SHAGO,
        ParadigmId::MAP,
        ParadigmId::CODE,
        ParadigmId::COPS,
    ];

    pub fn code(self) -> &'static str {
        use ParadigmId::*;
        match self {
            INIP => "INIP",
            AST => "AST",
            CODI => "CODI",
            DIREP => "DIREP",
            REP => "REP",
            COST => "COST",
            SHAGO => "SHAGO",
            MAP => "MAP",
            CODE => "CODE",
            COPS => "COPS",
        }
    }
}

impl fmt::Display for ParadigmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ParadigmId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ParadigmId::ALL
            .into_iter()
            .find(|p| p.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| CatalogError::UnknownParadigm(s.to_owned()))
    }
}
