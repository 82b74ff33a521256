use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CatalogError, ParadigmId, Subfunction};

/// `paradigm_id<TAB>name<TAB>comma-separated subfunctions`, `#` comments.
pub const SHIPPED_CATALOG: &str = include_str!("../../data/paradigms.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paradigm {
    pub id: ParadigmId,
    pub name: String,
    pub signature: BTreeSet<Subfunction>,
}

/// All ten paradigms with their signatures. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: Option<u32>,
    paradigms: BTreeMap<ParadigmId, Paradigm>,
}

impl Catalog {
    /// Parses a catalog file; anything but exactly the ten paradigms is refused.
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut version = None;
        let mut paradigms = BTreeMap::new();
        let mut rows = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            let parse_err = |reason: &str| CatalogError::Parse {
                line: i + 1,
                reason: reason.to_owned(),
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = Some(v.trim().parse().map_err(|_| parse_err("bad version"))?);
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, name, subs] = fields[..] else {
                return Err(parse_err("expected three tab-separated fields"));
            };
            let id: ParadigmId = id.parse()?;
            let signature = subs
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<BTreeSet<Subfunction>, _>>()?;
            if signature.is_empty() {
                return Err(CatalogError::EmptySignature(id));
            }
            let paradigm = Paradigm {
                id,
                name: name.trim().to_owned(),
                signature,
            };
            if paradigms.insert(id, paradigm).is_some() {
                return Err(CatalogError::DuplicateParadigm(id));
            }
        }
        if rows != ParadigmId::ALL.len() {
            return Err(CatalogError::WrongCount(rows));
        }
        Ok(Self { version, paradigms })
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_CATALOG).expect("shipped catalog parses")
    }

    pub fn len(&self) -> usize {
        self.paradigms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paradigms.is_empty()
    }

    pub fn get(&self, id: ParadigmId) -> &Paradigm {
        &self.paradigms[&id]
    }

    pub fn signature(&self, id: ParadigmId) -> &BTreeSet<Subfunction> {
        &self.get(id).signature
    }

    pub fn paradigms(&self) -> impl Iterator<Item = &Paradigm> {
        self.paradigms.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_has_ten() {
        let c = Catalog::shipped();
        assert_eq!(c.len(), 10);
        assert_eq!(c.version, Some(1));
        assert_eq!(c.get(ParadigmId::SHAGO).name, "Sharing Goods");
    }

    #[test]
    fn fails_closed() {
        let nine: String = SHIPPED_CATALOG
            .lines()
            .filter(|l| !l.starts_with("COPS"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(Catalog::parse(&nine), Err(CatalogError::WrongCount(9)));
        let dup = format!("{SHIPPED_CATALOG}CODI\tAgain\tDiscuss\n");
        assert_eq!(Catalog::parse(&dup), Err(CatalogError::DuplicateParadigm(ParadigmId::CODI)));
        let eleven = format!("{nine}COPS\tx\tVote\nXYZ\tx\tVote\n");
        assert!(matches!(Catalog::parse(&eleven), Err(CatalogError::UnknownParadigm(_))));
        let bad_sub = SHIPPED_CATALOG.replace("ShareGoods", "Gardening");
        assert!(matches!(Catalog::parse(&bad_sub), Err(CatalogError::UnknownSubfunction(_))));
        assert!(matches!(
            Catalog::parse("INIP\tonly two\n"),
            Err(CatalogError::Parse { line: 1, .. })
        ));
    }
}
