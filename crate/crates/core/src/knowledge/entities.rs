use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::repository::{RepositoryClient, RepositoryError};
use super::KnowledgeError;

/// Surface to type pairs recognized out of the box.
pub const SHIPPED_GAZETTEER: &str = include_str!("../../data/gazetteer.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    surface: String,
    entity_type: String,
    folded: Vec<char>,
}

/// Entity surfaces indexed by their first case-folded character.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    by_first: HashMap<char, Vec<Entry>>,
    len: usize,
}

fn fold(s: &str) -> Vec<char> {
    s.chars().flat_map(char::to_lowercase).collect()
}

impl Gazetteer {
    pub fn new<S: Into<String>, T: Into<String>>(entries: impl IntoIterator<Item = (S, T)>) -> Self {
        let mut g = Self::default();
        for (s, t) in entries {
            g.insert(s, t);
        }
        g
    }

    pub fn parse(tsv: &str) -> Result<Self, KnowledgeError> {
        let mut g = Self::default();
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((surface, ty)) = line.split_once('\t') else {
                return Err(KnowledgeError::Parse {
                    line: i + 1,
                    reason: "expected surface<TAB>type".into(),
                });
            };
            if surface.trim().is_empty() || ty.trim().is_empty() {
                return Err(KnowledgeError::Parse {
                    line: i + 1,
                    reason: "empty surface or type".into(),
                });
            }
            g.insert(surface.trim(), ty.trim());
        }
        Ok(g)
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_GAZETTEER).expect("shipped gazetteer parses")
    }

    /// Empty surfaces are ignored. A later entry with the same folded
    /// surface replaces the earlier one.
    pub fn insert(&mut self, surface: impl Into<String>, entity_type: impl Into<String>) {
        let surface = surface.into();
        let folded = fold(&surface);
        let Some(&first) = folded.first() else { return };
        let bucket = self.by_first.entry(first).or_default();
        let entry = Entry {
            surface,
            entity_type: entity_type.into(),
            folded,
        };
        match bucket.iter_mut().find(|e| e.folded == entry.folded) {
            Some(existing) => *existing = entry,
            None => {
                bucket.push(entry);
                self.len += 1;
                bucket.sort_by(|a, b| b.folded.len().cmp(&a.folded.len()).then(a.folded.cmp(&b.folded)));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    /// The matched slice of the input, as written.
    pub surface: String,
    /// The gazetteer's spelling of the entity.
    pub entry: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedText {
    pub text: String,
    pub mentions: Vec<EntityMention>,
}

impl AnnotatedText {
    pub fn links(&self) -> impl Iterator<Item = ((usize, usize), &str)> {
        self.mentions
            .iter()
            .filter_map(|m| m.uri.as_deref().map(|u| ((m.start, m.end), u)))
    }
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte end of a case-insensitive match of `pattern` at `start`, if the
/// match consumes whole characters of `text`.
fn match_at(text: &str, start: usize, pattern: &[char]) -> Option<usize> {
    let mut j = 0;
    for (off, c) in text[start..].char_indices() {
        for f in c.to_lowercase() {
            if j == pattern.len() || pattern[j] != f {
                return None;
            }
            j += 1;
        }
        if j == pattern.len() {
            return Some(start + off + c.len_utf8());
        }
    }
    None
}

/// Longest-match, left-to-right, case-insensitive scan. Mentions start and
/// end on word boundaries and never overlap.
pub fn recognize_entities(text: &str, gazetteer: &Gazetteer) -> Vec<EntityMention> {
    let mut mentions = Vec::new();
    if gazetteer.is_empty() {
        return mentions;
    }
    let mut prev: Option<char> = None;
    let mut resume = 0;
    for (i, c) in text.char_indices() {
        let at_boundary = prev.is_none_or(|p| !is_word(p) || !is_word(c));
        prev = Some(c);
        if i < resume || !at_boundary {
            continue;
        }
        let Some(first) = c.to_lowercase().next() else { continue };
        let Some(bucket) = gazetteer.by_first.get(&first) else { continue };
        let hit = bucket.iter().find_map(|e| {
            let end = match_at(text, i, &e.folded)?;
            let closes = text[end..].chars().next().is_none_or(|n| {
                !is_word(n) || !text[..end].chars().next_back().is_some_and(is_word)
            });
            closes.then_some((e, end))
        });
        if let Some((e, end)) = hit {
            mentions.push(EntityMention {
                surface: text[i..end].to_owned(),
                entry: e.surface.clone(),
                entity_type: e.entity_type.clone(),
                start: i,
                end,
                uri: None,
            });
            resume = end;
        }
    }
    mentions
}

/// Recognizes entities and links each one through the repository client.
/// The text is kept verbatim.
pub fn annotate(
    text: &str,
    gazetteer: &Gazetteer,
    repo: &RepositoryClient,
) -> Result<AnnotatedText, RepositoryError> {
    let mut mentions = recognize_entities(text, gazetteer);
    for m in &mut mentions {
        m.uri = repo.lookup(&m.entry)?;
    }
    Ok(AnnotatedText {
        text: text.to_owned(),
        mentions,
    })
}
