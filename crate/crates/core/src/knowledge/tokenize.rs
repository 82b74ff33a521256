use std::collections::HashSet;

/// English and Italian stopwords, one per line, `#` comments.
pub const SHIPPED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Lowercases, splits on anything that is not alphanumeric, then drops
/// single-character tokens and stopwords.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::from_list(SHIPPED_STOPWORDS)
    }
}

impl Tokenizer {
    pub fn from_list(list: &str) -> Self {
        let stopwords = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { stopwords }
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| t.chars().count() >= 2 && !self.stopwords.contains(*t))
            .map(str::to_owned)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_filters() {
        let t = Tokenizer::default();
        assert_eq!(
            t.tokens("The Observatory of Rome: a World-Café, 2 x 20min!"),
            vec!["observatory", "rome", "world", "café", "20min"]
        );
        assert_eq!(t.tokens("della scienza e la città"), vec!["scienza", "città"]);
        assert!(t.tokens("the of and").is_empty());
    }

    #[test]
    fn idempotent() {
        let t = Tokenizer::default();
        let once = t.tokens("Science CAFÉ: İstanbul & Zürich, co-design");
        let twice = t.tokens(&once.join(" "));
        assert_eq!(once, twice);
    }
}
