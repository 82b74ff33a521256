//! Paradigm profile of a feature set, and catalog entry validation.

use std::collections::BTreeSet;

use scicafe_core::catalog::*;

fn main() -> Result<(), CatalogError> {
    let catalog = Catalog::shipped();
    let features: BTreeSet<Subfunction> = ["Discuss", "Deliberate", "Vote"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let profile = classify(&catalog, &features)?;
    for (id, score) in &profile.scores {
        println!("{:<6} {score:.3}", id.to_string());
    }
    println!("dominant {:?}", profile.dominant);

    let entry = CatalogEntry {
        name: "deliberation method".into(),
        kind: ToolKind::Method,
        functions: vec![FunctionTag::of(Subfunction::Deliberate)],
        references: Vec::new(),
    };
    for v in validate_entry(&entry) {
        println!("violation: {v}");
    }
    Ok(())
}
