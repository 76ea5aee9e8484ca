use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::error::{Error, Result};

/// Number of token-weight pairs in every representative topic.
pub const TOPIC_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lsa,
    Lda,
    Embed,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lsa, ModelKind::Lda, ModelKind::Embed];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lsa => "lsa",
            ModelKind::Lda => "lda",
            ModelKind::Embed => "embed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSemantics {
    AbsLoading,
    WordProbability,
    CTfIdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub token: String,
    pub weight: f64,
}

/// The top-20 token-weight summary of one domain-language collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRepresentation {
    pub model_kind: ModelKind,
    pub language: Language,
    pub domain: String,
    pub entries: Vec<TopicEntry>,
    pub weight_semantics: WeightSemantics,
}

impl TopicRepresentation {
    /// Validates the invariants: exactly 20 distinct tokens, finite
    /// nonnegative weights in descending order.
    pub fn new(
        model_kind: ModelKind,
        language: Language,
        domain: impl Into<String>,
        entries: Vec<TopicEntry>,
        weight_semantics: WeightSemantics,
    ) -> Result<Self> {
        if entries.len() != TOPIC_SIZE {
            return Err(Error::Parameter(format!(
                "topic must have {TOPIC_SIZE} entries, got {}",
                entries.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.token.as_str()) {
                return Err(Error::Parameter(format!("duplicate topic token `{}`", e.token)));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::Parameter(format!("invalid weight {} for `{}`", e.weight, e.token)));
            }
            if i > 0 && entries[i - 1].weight < e.weight {
                return Err(Error::Parameter("topic weights must be sorted descending".into()));
            }
        }
        Ok(TopicRepresentation {
            model_kind,
            language,
            domain: domain.into(),
            entries,
            weight_semantics,
        })
    }

    /// Picks the 20 highest-scoring tokens. Ties keep the order of `scored`.
    pub fn from_scores(
        model_kind: ModelKind,
        language: Language,
        domain: impl Into<String>,
        scored: &[(&str, f64)],
        weight_semantics: WeightSemantics,
    ) -> Result<Self> {
        if scored.len() < TOPIC_SIZE {
            return Err(Error::VocabularyTooSmall {
                size: scored.len(),
                required: TOPIC_SIZE,
            });
        }
        let entries = top_entries(scored, TOPIC_SIZE);
        Self::new(model_kind, language, domain, entries, weight_semantics)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.token.as_str())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }
}

pub(crate) fn top_entries(scored: &[(&str, f64)], n: usize) -> Vec<TopicEntry> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .1
            .partial_cmp(&scored[a].1)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(n)
        .map(|i| TopicEntry {
            token: scored[i].0.to_string(),
            weight: scored[i].1,
        })
        .collect()
}
