//! Noun-only tokenization behind a pluggable analyzer interface.
//!
//! Two analyzer families exist:
//!
//! * [`SidecarAnalyzer`] reads noun tokens produced by an external
//!   morphological analyzer from a JSONL sidecar file
//!   (`{"id": .., "tokens": [..], "sent_counts": [..]}`).
//! * [`FallbackAnalyzer`] is a lexicon matcher that needs no external tools.
//!   For the source language it performs longest-match lookup inside each
//!   whitespace-delimited word, which strips attached particles. For the
//!   target language it keeps lexicon words plus runs of capitalized words
//!   that do not start a sentence; multi-word runs are joined with `_`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Language};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub language: Language,
    pub tokens: Vec<String>,
    pub sentence_counts: Vec<usize>,
}

impl TokenizedDocument {
    pub fn new(
        doc_id: impl Into<String>,
        language: Language,
        tokens: Vec<String>,
        sentence_counts: Vec<usize>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(Error::Parameter(format!(
                "document `{doc_id}`: invalid token {bad:?}"
            )));
        }
        if sentence_counts.iter().sum::<usize>() != tokens.len() {
            return Err(Error::Parameter(format!(
                "document `{doc_id}`: sentence counts do not sum to the token count"
            )));
        }
        Ok(TokenizedDocument {
            doc_id,
            language,
            tokens,
            sentence_counts,
        })
    }

    /// Convenience for tests and examples: one sentence holding every token.
    pub fn single_sentence(doc_id: impl Into<String>, language: Language, tokens: &[&str]) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        let n = tokens.len();
        Self::new(doc_id, language, tokens, vec![n]).expect("valid tokens")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzerKind {
    ExternalAdapter,
    BundledFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerDescriptor {
    pub name: String,
    pub language: Language,
    pub kind: AnalyzerKind,
}

pub trait NounAnalyzer: Send + Sync {
    fn descriptor(&self) -> &AnalyzerDescriptor;

    /// Noun tokens for each sentence of `doc`, in document order.
    fn sentence_nouns(&self, doc: &Document) -> Result<Vec<Vec<String>>>;
}

pub fn tokenize_nouns(doc: &Document, analyzer: &dyn NounAnalyzer) -> Result<TokenizedDocument> {
    let desc = analyzer.descriptor();
    if desc.language != doc.language {
        return Err(Error::Config(format!(
            "analyzer `{}` handles {} documents, got a {} document",
            desc.name, desc.language, doc.language
        )));
    }
    let per_sentence = analyzer.sentence_nouns(doc)?;
    let sentence_counts = per_sentence.iter().map(Vec::len).collect();
    let tokens = per_sentence.into_iter().flatten().collect();
    TokenizedDocument::new(doc.id.clone(), doc.language, tokens, sentence_counts).map_err(|e| {
        Error::Adapter {
            analyzer: desc.name.clone(),
            message: e.to_string(),
        }
    })
}

/// Named analyzers; names are unique.
#[derive(Default)]
pub struct AnalyzerRegistry {
    analyzers: BTreeMap<String, Box<dyn NounAnalyzer>>,
}

impl AnalyzerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, analyzer: Box<dyn NounAnalyzer>) -> Result<()> {
        let name = analyzer.descriptor().name.clone();
        if self.analyzers.contains_key(&name) {
            return Err(Error::Config(format!("analyzer `{name}` registered twice")));
        }
        self.analyzers.insert(name, analyzer);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn NounAnalyzer> {
        self.analyzers.get(name).map(|a| a.as_ref())
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &AnalyzerDescriptor> {
        self.analyzers.values().map(|a| a.descriptor())
    }

    pub fn tokenize(&self, doc: &Document, descriptor: &AnalyzerDescriptor) -> Result<TokenizedDocument> {
        let analyzer = self
            .get(&descriptor.name)
            .ok_or_else(|| Error::Config(format!("analyzer `{}` is not registered", descriptor.name)))?;
        tokenize_nouns(doc, analyzer)
    }
}

/// Reads a noun lexicon: one token per line, `#` comments and blank lines skipped.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub struct FallbackAnalyzer {
    descriptor: AnalyzerDescriptor,
    lexicon: HashSet<String>,
    // lowercase forms, used for target-side lookups
    folded: HashSet<String>,
    max_chars: usize,
}

impl FallbackAnalyzer {
    pub fn new<I, S>(name: impl Into<String>, language: Language, lexicon: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let lexicon: HashSet<String> = lexicon.into_iter().map(Into::into).filter(|s: &String| !s.is_empty()).collect();
        let folded = lexicon.iter().map(|s| s.to_lowercase()).collect();
        let max_chars = lexicon.iter().map(|s| s.chars().count()).max().unwrap_or(0);
        FallbackAnalyzer {
            descriptor: AnalyzerDescriptor {
                name: name.into(),
                language,
                kind: AnalyzerKind::BundledFallback,
            },
            lexicon,
            folded,
            max_chars,
        }
    }

    pub fn from_file(name: impl Into<String>, language: Language, path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(name, language, load_lexicon(path)?))
    }

    fn source_nouns(&self, sentence: &str, out: &mut Vec<String>) {
        for word in sentence.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let longest = (1..=self.max_chars.min(chars.len() - i))
                    .rev()
                    .find(|&len| self.lexicon.contains(&chars[i..i + len].iter().collect::<String>()));
                match longest {
                    Some(len) => {
                        out.push(chars[i..i + len].iter().collect());
                        i += len;
                    }
                    None => i += 1,
                }
            }
        }
    }

    fn target_nouns(&self, sentence: &str, out: &mut Vec<String>) {
        // (trimmed word, ends with punctuation that breaks a name run)
        let words: Vec<(&str, bool)> = sentence
            .split_whitespace()
            .map(|w| {
                let trimmed = w.trim_matches(|c: char| !c.is_alphanumeric());
                (trimmed, trimmed.len() != w.len() && !w.ends_with(trimmed))
            })
            .collect();
        let capitalized = |w: &str| w.chars().next().is_some_and(char::is_uppercase);
        let in_lexicon = |w: &str| self.lexicon.contains(w) || self.folded.contains(&w.to_lowercase());

        let mut i = 0;
        while i < words.len() {
            let (w, _) = words[i];
            if w.is_empty() {
                i += 1;
            } else if in_lexicon(w) {
                out.push(w.to_string());
                i += 1;
            } else if i > 0 && capitalized(w) {
                let mut run = vec![w];
                let mut broken = words[i].1;
                i += 1;
                while i < words.len() && !broken {
                    let (next, brk) = words[i];
                    if next.is_empty() || !capitalized(next) || in_lexicon(next) {
                        break;
                    }
                    run.push(next);
                    broken = brk;
                    i += 1;
                }
                out.push(run.join("_"));
            } else {
                i += 1;
            }
        }
    }
}

impl NounAnalyzer for FallbackAnalyzer {
    fn descriptor(&self) -> &AnalyzerDescriptor {
        &self.descriptor
    }

    fn sentence_nouns(&self, doc: &Document) -> Result<Vec<Vec<String>>> {
        Ok(doc
            .sentence_texts()
            .map(|s| {
                let mut nouns = Vec::new();
                match self.descriptor.language {
                    Language::Source => self.source_nouns(s, &mut nouns),
                    Language::Target => self.target_nouns(s, &mut nouns),
                }
                nouns
            })
            .collect())
    }
}

#[derive(Deserialize)]
struct SidecarRecord {
    id: String,
    tokens: Vec<String>,
    sent_counts: Vec<usize>,
}

/// Adapter over pre-tokenized output of an external analyzer.
pub struct SidecarAnalyzer {
    descriptor: AnalyzerDescriptor,
    entries: HashMap<String, (Vec<String>, Vec<usize>)>,
}

impl SidecarAnalyzer {
    pub fn from_file(name: impl Into<String>, language: Language, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(name, language, &raw)
    }

    pub fn parse(name: impl Into<String>, language: Language, raw: &str) -> Result<Self> {
        let name = name.into();
        let mut entries = HashMap::new();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: SidecarRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
            // validates token shape and counts
            TokenizedDocument::new(&rec.id, language, rec.tokens.clone(), rec.sent_counts.clone()).map_err(|e| {
                Error::Adapter {
                    analyzer: name.clone(),
                    message: format!("line {}: {e}", idx + 1),
                }
            })?;
            if entries.insert(rec.id.clone(), (rec.tokens, rec.sent_counts)).is_some() {
                return Err(Error::DuplicateId { line: idx + 1, id: rec.id });
            }
        }
        Ok(SidecarAnalyzer {
            descriptor: AnalyzerDescriptor {
                name,
                language,
                kind: AnalyzerKind::ExternalAdapter,
            },
            entries,
        })
    }
}

impl NounAnalyzer for SidecarAnalyzer {
    fn descriptor(&self) -> &AnalyzerDescriptor {
        &self.descriptor
    }

    fn sentence_nouns(&self, doc: &Document) -> Result<Vec<Vec<String>>> {
        let (tokens, counts) = self.entries.get(&doc.id).ok_or_else(|| Error::Adapter {
            analyzer: self.descriptor.name.clone(),
            message: format!("no sidecar entry for document `{}`", doc.id),
        })?;
        let mut rest = tokens.as_slice();
        Ok(counts
            .iter()
            .map(|&n| {
                let (head, tail) = rest.split_at(n);
                rest = tail;
                head.to_vec()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NounStats {
    pub language: Language,
    pub documents: usize,
    pub total_tokens: usize,
    pub sentences: usize,
    /// `None` when there are no sentences.
    pub avg_per_sentence: Option<f64>,
    pub unique_tokens: usize,
}

/// Noun statistics over one language's documents (typically one domain).
pub fn token_stats(tokenized: &[TokenizedDocument]) -> Result<NounStats> {
    let first = tokenized.first().ok_or(Error::EmptyInput("no tokenized documents"))?;
    if tokenized.iter().any(|d| d.language != first.language) {
        return Err(Error::MixedLanguages);
    }
    let total_tokens = tokenized.iter().map(|d| d.tokens.len()).sum();
    let sentences = tokenized.iter().map(|d| d.sentence_counts.len()).sum();
    let unique: HashSet<&str> = tokenized.iter().flat_map(|d| d.tokens.iter().map(String::as_str)).collect();
    Ok(NounStats {
        language: first.language,
        documents: tokenized.len(),
        total_tokens,
        sentences,
        avg_per_sentence: (sentences > 0).then(|| total_tokens as f64 / sentences as f64),
        unique_tokens: unique.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(lang: Language, text: &str) -> Document {
        Document::new("d1", "dom", lang, text).unwrap()
    }

    #[test]
    fn english_fallback_picks_lexicon_nouns() {
        let a = FallbackAnalyzer::new("en", Language::Target, ["fox", "dog"]);
        let t = tokenize_nouns(&doc(Language::Target, "The quick fox runs"), &a).unwrap();
        assert_eq!(t.tokens, ["fox"]);
        assert_eq!(t.sentence_counts, [1]);
    }

    #[test]
    fn english_fallback_joins_name_runs() {
        let a = FallbackAnalyzer::new("en", Language::Target, ["skater"]);
        let t = tokenize_nouns(
            &doc(Language::Target, "The skater Kim Yuna met SNU students. Later the Blue House, Seoul called."),
            &a,
        )
        .unwrap();
        assert_eq!(t.tokens, ["skater", "Kim_Yuna", "SNU", "Blue_House", "Seoul"]);
        assert_eq!(t.sentence_counts, [3, 2]);
    }

    #[test]
    fn zero_nouns_is_valid() {
        let a = FallbackAnalyzer::new("en", Language::Target, ["fox"]);
        let t = tokenize_nouns(&doc(Language::Target, "nothing here at all"), &a).unwrap();
        assert!(t.tokens.is_empty());
        assert_eq!(t.sentence_counts, [0]);
    }

    #[test]
    fn korean_fallback_longest_match_strips_particles() {
        let a = FallbackAnalyzer::new("ko", Language::Source, ["학생", "학교", "학"]);
        let t = tokenize_nouns(&doc(Language::Source, "학생이 학교에 갔다"), &a).unwrap();
        assert_eq!(t.tokens, ["학생", "학교"]);
    }

    #[test]
    fn korean_sidecar_adapter() {
        let sidecar = r#"{"id": "d1", "tokens": ["학생", "학교"], "sent_counts": [2]}"#;
        let a = SidecarAnalyzer::parse("mecab-ko", Language::Source, sidecar).unwrap();
        let t = tokenize_nouns(&doc(Language::Source, "학생이 학교에 갔다"), &a).unwrap();
        assert_eq!(t.tokens, ["학생", "학교"]);
        assert_eq!(a.descriptor().kind, AnalyzerKind::ExternalAdapter);
    }

    #[test]
    fn sidecar_missing_document_is_adapter_error() {
        let a = SidecarAnalyzer::parse("ext", Language::Source, r#"{"id":"other","tokens":[],"sent_counts":[]}"#).unwrap();
        assert!(matches!(
            tokenize_nouns(&doc(Language::Source, "텍스트"), &a),
            Err(Error::Adapter { .. })
        ));
    }

    #[test]
    fn sidecar_rejects_bad_counts() {
        let bad = r#"{"id":"x","tokens":["a","b"],"sent_counts":[1]}"#;
        assert!(matches!(SidecarAnalyzer::parse("ext", Language::Source, bad), Err(Error::Adapter { .. })));
    }

    #[test]
    fn language_mismatch_is_config_error() {
        let a = FallbackAnalyzer::new("en", Language::Target, ["fox"]);
        assert!(matches!(
            tokenize_nouns(&doc(Language::Source, "fox"), &a),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn registry_unknown_analyzer() {
        let mut reg = AnalyzerRegistry::new();
        reg.register(Box::new(FallbackAnalyzer::new("en", Language::Target, ["fox"]))).unwrap();
        assert!(reg.register(Box::new(FallbackAnalyzer::new("en", Language::Target, ["x"]))).is_err());
        let missing = AnalyzerDescriptor {
            name: "spacy".into(),
            language: Language::Target,
            kind: AnalyzerKind::ExternalAdapter,
        };
        assert!(matches!(reg.tokenize(&doc(Language::Target, "fox"), &missing), Err(Error::Config(_))));
        let en = reg.descriptors().next().unwrap().clone();
        assert_eq!(reg.tokenize(&doc(Language::Target, "a fox"), &en).unwrap().tokens, ["fox"]);
    }

    #[test]
    fn stats_counts() {
        let docs = [
            TokenizedDocument::single_sentence("1", Language::Target, &["a", "b"]),
            TokenizedDocument::single_sentence("2", Language::Target, &["a"]),
        ];
        let s = token_stats(&docs).unwrap();
        assert_eq!((s.total_tokens, s.unique_tokens), (3, 2));
    }

    #[test]
    fn stats_average_per_sentence() {
        let d = TokenizedDocument::new(
            "1",
            Language::Source,
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec![1, 3],
        )
        .unwrap();
        assert_eq!(token_stats(&[d]).unwrap().avg_per_sentence, Some(2.0));
    }

    #[test]
    fn stats_reject_mixed_languages_and_empty() {
        let docs = [
            TokenizedDocument::single_sentence("1", Language::Target, &["a"]),
            TokenizedDocument::single_sentence("2", Language::Source, &["a"]),
        ];
        assert!(matches!(token_stats(&docs), Err(Error::MixedLanguages)));
        assert!(matches!(token_stats(&[]), Err(Error::EmptyInput(_))));
    }

    fn is_subsequence(needle: &[String], hay: &[String]) -> bool {
        let mut it = hay.iter();
        needle.iter().all(|n| it.any(|h| h == n))
    }

    proptest! {
        #[test]
        fn fallback_is_deterministic_and_ordered(words in prop::collection::vec(prop::sample::select(vec!["fox", "dog", "the", "ran", "Fox", "cat"]), 1..20)) {
            let text = words.join(" ");
            let a = FallbackAnalyzer::new("en", Language::Target, ["fox", "dog"]);
            let d = doc(Language::Target, &text);
            let t1 = tokenize_nouns(&d, &a).unwrap();
            let t2 = tokenize_nouns(&d, &a).unwrap();
            prop_assert_eq!(&t1, &t2);
            let segments: Vec<String> = text.split_whitespace().map(String::from).collect();
            let parts: Vec<String> = t1.tokens.iter().flat_map(|t| t.split('_').map(String::from)).collect();
            prop_assert!(is_subsequence(&parts, &segments));
            let stats = token_stats(&[t1]).unwrap();
            prop_assert!(stats.unique_tokens <= stats.total_tokens);
        }

        #[test]
        fn source_tokens_are_substrings_in_order(syll in prop::collection::vec(prop::sample::select(vec!["학생", "학교", "이", "에", "를", "교"]), 1..15)) {
            let text = syll.join("");
            let a = FallbackAnalyzer::new("ko", Language::Source, ["학생", "학교", "교"]);
            let t = tokenize_nouns(&doc(Language::Source, &text), &a).unwrap();
            let mut rest = text.as_str();
            for tok in &t.tokens {
                let at = rest.find(tok.as_str());
                prop_assert!(at.is_some());
                rest = &rest[at.unwrap() + tok.len()..];
            }
        }
    }
}
