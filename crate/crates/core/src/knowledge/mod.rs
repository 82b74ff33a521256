//! Text analytics around a session: keywords, entities, annotation,
//! recommendations, participation metrics and moderation alerts.

mod entities;
mod keywords;
mod metrics;
mod moderation;
mod recommend;
mod repository;
mod tokenize;

use thiserror::Error;

use crate::session::ReplayError;

pub use entities::{AnnotatedText, EntityMention, Gazetteer, annotate, recognize_entities, SHIPPED_GAZETTEER};
pub use keywords::{extract_keywords, keyword_vector, Corpus, Document, KeywordVector};
pub use metrics::{session_metrics, ParticipationSummary, UserActivity};
pub use moderation::{moderation_alerts, ModerationAlert};
pub use recommend::{recommend, recommend_above};
pub use repository::{
    FixtureBackend, LookupMode, RepositoryBackend, RepositoryClient, RepositoryError,
    SHIPPED_FIXTURE,
};
pub use tokenize::{Tokenizer, SHIPPED_STOPWORDS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KnowledgeError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("document {0} is not part of the corpus")]
    DocumentNotInCorpus(String),
    #[error("document {0} has no tokens after filtering")]
    EmptyDocument(String),
    #[error("corrupt log: {0}")]
    CorruptLog(#[from] ReplayError),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("threshold must be positive")]
    InvalidThreshold,
}
