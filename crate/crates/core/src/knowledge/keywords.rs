use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tokenize::Tokenizer;
use super::KnowledgeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let text = text.into();
        let tokens = tokenizer.tokens(&text);
        Self {
            id: id.into(),
            text,
            tokens,
        }
    }

    pub fn term_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    doc_freq: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Self {
        let mut doc_freq = BTreeMap::new();
        for d in &docs {
            for t in d.term_counts().into_keys() {
                *doc_freq.entry(t.to_owned()).or_insert(0) += 1;
            }
        }
        Self { docs, doc_freq }
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = (&'a str, &'a str)>, tokenizer: &Tokenizer) -> Self {
        Self::new(
            texts
                .into_iter()
                .map(|(id, text)| Document::new(id, text, tokenizer))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.id == id)
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc_freq(&self, token: &str) -> usize {
        self.doc_freq.get(token).copied().unwrap_or(0)
    }

    /// ln(N / df); zero for tokens present in every document.
    pub fn idf(&self, token: &str) -> f64 {
        let df = self.doc_freq(token);
        if df == 0 {
            return 0.0;
        }
        (self.docs.len() as f64 / df as f64).ln()
    }

    fn weights(&self, doc_id: &str) -> Result<BTreeMap<String, f64>, KnowledgeError> {
        if self.docs.is_empty() {
            return Err(KnowledgeError::EmptyCorpus);
        }
        let doc = self
            .get(doc_id)
            .ok_or_else(|| KnowledgeError::DocumentNotInCorpus(doc_id.to_owned()))?;
        if doc.tokens.is_empty() {
            return Err(KnowledgeError::EmptyDocument(doc_id.to_owned()));
        }
        Ok(doc
            .term_counts()
            .into_iter()
            .map(|(t, tf)| (t.to_owned(), tf as f64 * self.idf(t)))
            .collect())
    }
}

/// Weights closer than this rank as ties.
const TIE_GRAIN: f64 = 1e-9;

fn tie_key(w: f64) -> i64 {
    (w / TIE_GRAIN).round() as i64
}

/// Top-k tf-idf terms of a corpus document: raw term count times
/// ln(N / df), highest first, ties in ascending token order.
pub fn extract_keywords(
    doc_id: &str,
    corpus: &Corpus,
    k: usize,
) -> Result<Vec<(String, f64)>, KnowledgeError> {
    if k == 0 {
        return Err(KnowledgeError::InvalidK);
    }
    let mut ranked: Vec<(String, f64)> = corpus.weights(doc_id)?.into_iter().collect();
    ranked.sort_by_cached_key(|(t, w)| (std::cmp::Reverse(tie_key(*w)), t.clone()));
    ranked.truncate(k);
    Ok(ranked)
}

/// Unit-length tf-idf vector of a corpus document.
pub fn keyword_vector(doc_id: &str, corpus: &Corpus) -> Result<KeywordVector, KnowledgeError> {
    Ok(KeywordVector::from_weights(corpus.weights(doc_id)?))
}

/// Non-negative term weights, normalized to unit length unless all zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordVector {
    weights: BTreeMap<String, f64>,
}

impl KeywordVector {
    /// Drops non-positive and non-finite weights, then normalizes.
    pub fn from_weights<K: Into<String>>(weights: impl IntoIterator<Item = (K, f64)>) -> Self {
        let mut kept: BTreeMap<String, f64> = BTreeMap::new();
        for (k, w) in weights {
            if w.is_finite() && w > 0.0 {
                *kept.entry(k.into()).or_insert(0.0) += w;
            }
        }
        let norm = kept.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for w in kept.values_mut() {
                *w /= norm;
            }
        }
        Self { weights: kept }
    }

    /// Raw term counts of a token stream, normalized.
    pub fn from_tokens<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.as_ref().to_owned()).or_insert(0.0) += 1.0;
        }
        Self::from_weights(counts)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn get(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &KeywordVector) -> f64 {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .map(|(t, w)| w * large.get(t))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[(&str, &str)]) -> Corpus {
        Corpus::from_texts(texts.iter().copied(), &Tokenizer::default())
    }

    #[test]
    fn science_beats_cafe() {
        let c = corpus(&[
            ("d1", "science cafe science"),
            ("d2", "world cafe"),
            ("d3", "delphi panel"),
        ]);
        // science: tf 2, df 1 -> 2 ln 3 ~ 2.197; cafe: tf 1, df 2 -> ln 1.5 ~ 0.405.
        let top = extract_keywords("d1", &c, 1).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].0, "science");
        assert!((top[0].1 - 2.0 * 3f64.ln()).abs() < 1e-12);
        let both = extract_keywords("d1", &c, 5).unwrap();
        assert_eq!(both[1].0, "cafe");
        assert!((both[1].1 - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_document_corpus_has_zero_weights() {
        let c = corpus(&[("d", "zeta alpha beta alpha")]);
        let kw = extract_keywords("d", &c, 10).unwrap();
        assert_eq!(
            kw.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>(),
            vec!["alpha", "beta", "zeta"]
        );
        assert!(kw.iter().all(|(_, w)| *w == 0.0));
        assert!(keyword_vector("d", &c).unwrap().is_zero());
    }

    #[test]
    fn errors() {
        let c = corpus(&[("d1", "the of and"), ("d2", "panel")]);
        assert_eq!(
            extract_keywords("d1", &c, 1).unwrap_err(),
            KnowledgeError::EmptyDocument("d1".into())
        );
        assert_eq!(extract_keywords("d2", &c, 0).unwrap_err(), KnowledgeError::InvalidK);
        assert!(matches!(
            extract_keywords("nope", &c, 1),
            Err(KnowledgeError::DocumentNotInCorpus(_))
        ));
        assert_eq!(
            extract_keywords("d", &Corpus::default(), 1).unwrap_err(),
            KnowledgeError::EmptyCorpus
        );
    }

    #[test]
    fn vectors_are_unit_or_zero() {
        let v = KeywordVector::from_weights([("a", 3.0), ("b", 4.0), ("c", 0.0)]);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert_eq!(v.get("a"), 0.6);
        assert_eq!(v.weights().len(), 2);
        assert_eq!(KeywordVector::from_weights([("a", 0.0)]).norm(), 0.0);
    }
}
