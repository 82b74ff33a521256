use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FunctionTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToolKind {
    Tool,
    Toolkit,
    Technique,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRef {
    pub name: String,
    pub kind: ToolKind,
}

/// A platform component as described in a catalog file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: ToolKind,
    #[serde(default)]
    pub functions: Vec<FunctionTag>,
    #[serde(default)]
    pub references: Vec<ComponentRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    MethodWithoutComponents,
    ToolkitWithoutTools,
    TechniqueWithoutTool,
    ToolWithReferences,
    DisallowedReference { reference: String, kind: ToolKind },
    SelfReference,
    DuplicateReference { reference: String },
    MalformedFunctionTag { tag: FunctionTag },
    BlankName,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MethodWithoutComponents => f.write_str("method must combine components"),
            Violation::ToolkitWithoutTools => f.write_str("toolkit must collect at least one tool"),
            Violation::TechniqueWithoutTool => {
                f.write_str("technique must put a tool or toolkit into action")
            }
            Violation::ToolWithReferences => f.write_str("tools are leaves and cannot reference components"),
            Violation::DisallowedReference { reference, kind } => {
                write!(f, "cannot reference {reference} ({kind:?}) from this kind")
            }
            Violation::SelfReference => f.write_str("entry references itself"),
            Violation::DuplicateReference { reference } => {
                write!(f, "{reference} referenced more than once")
            }
            Violation::MalformedFunctionTag { tag } => {
                write!(f, "{} is not a {:?} subfunction", tag.sub, tag.function)
            }
            Violation::BlankName => f.write_str("entry name is blank"),
        }
    }
}

fn may_reference(from: ToolKind, to: ToolKind) -> bool {
    use ToolKind::*;
    match from {
        Tool => false,
        Toolkit => to == Tool,
        Technique => matches!(to, Tool | Toolkit),
        Method => matches!(to, Tool | Toolkit | Technique),
    }
}

/// All hierarchy and tag problems of an entry; empty means valid.
pub fn validate_entry(entry: &CatalogEntry) -> Vec<Violation> {
    use ToolKind::*;
    let mut out = Vec::new();
    if entry.name.trim().is_empty() {
        out.push(Violation::BlankName);
    }
    let refs = &entry.references;
    let count = |kinds: &[ToolKind]| refs.iter().filter(|r| kinds.contains(&r.kind)).count();
    match entry.kind {
        Tool if !refs.is_empty() => out.push(Violation::ToolWithReferences),
        Toolkit if count(&[Tool]) == 0 => out.push(Violation::ToolkitWithoutTools),
        Technique if count(&[Tool, Toolkit]) == 0 => out.push(Violation::TechniqueWithoutTool),
        Method if count(&[Tool, Toolkit, Technique]) == 0 => {
            out.push(Violation::MethodWithoutComponents)
        }
        _ => {}
    }
    let mut seen = BTreeSet::new();
    for r in refs {
        if entry.kind != Tool && !may_reference(entry.kind, r.kind) {
            out.push(Violation::DisallowedReference {
                reference: r.name.clone(),
                kind: r.kind,
            });
        }
        if r.name == entry.name {
            out.push(Violation::SelfReference);
        }
        if !seen.insert(r.name.as_str()) {
            out.push(Violation::DuplicateReference {
                reference: r.name.clone(),
            });
        }
    }
    for tag in &entry.functions {
        if !tag.is_well_formed() {
            out.push(Violation::MalformedFunctionTag { tag: *tag });
        }
    }
    out
}
