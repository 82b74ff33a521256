use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Catalog, CatalogError, ParadigmId, Subfunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmProfile {
    /// |features ∩ signature| / |signature| per paradigm.
    pub scores: BTreeMap<ParadigmId, f64>,
    /// Every paradigm sharing the top score; empty when nothing overlaps.
    pub dominant: Vec<ParadigmId>,
}

/// Scores each paradigm by how much of its signature the features cover.
pub fn classify(
    catalog: &Catalog,
    features: &BTreeSet<Subfunction>,
) -> Result<ParadigmProfile, CatalogError> {
    if features.is_empty() {
        return Err(CatalogError::EmptyFeatures);
    }
    let fractions: Vec<(ParadigmId, usize, usize)> = catalog
        .paradigms()
        .map(|p| (p.id, p.signature.intersection(features).count(), p.signature.len()))
        .collect();
    let (best_hit, best_len) = fractions
        .iter()
        .map(|&(_, h, l)| (h, l))
        .max_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)))
        .unwrap_or((0, 1));
    let dominant = if best_hit == 0 {
        Vec::new()
    } else {
        fractions
            .iter()
            .filter(|&&(_, h, l)| h * best_len == best_hit * l)
            .map(|&(id, _, _)| id)
            .collect()
    };
    let scores = fractions
        .into_iter()
        .map(|(id, h, l)| (id, h as f64 / l as f64))
        .collect();
    Ok(ParadigmProfile { scores, dominant })
}

/// Union of the signatures of the given paradigms.
pub fn compose(catalog: &Catalog, ids: &[ParadigmId]) -> BTreeSet<Subfunction> {
    ids.iter()
        .flat_map(|id| catalog.signature(*id).iter().copied())
        .collect()
}
