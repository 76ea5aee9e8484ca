//! Parallel corpus ingestion and descriptive statistics.
//!
//! A corpus is a JSONL file with one translation pair per line:
//!
//! ```text
//! {"id": "edu-001", "domain": "education", "source": "...", "target": "...", "scores": {"bleu": 31.2}}
//! ```
//!
//! `scores` is optional and carries externally computed metric values.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Source,
    Target,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Source => "source",
            Language::Target => "target",
        }
    }
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One side of a translation pair.
///
/// `sentences` holds byte ranges into `text`, ascending and non-overlapping,
/// each aligned to `char` boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub domain: String,
    pub language: Language,
    pub text: String,
    pub sentences: Vec<Range<usize>>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        domain: impl Into<String>,
        language: Language,
        text: impl Into<String>,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyInput("document text is blank"));
        }
        let sentences = split_sentences(&text, language);
        Ok(Document {
            id: id.into(),
            domain: domain.into(),
            language,
            text,
            sentences,
        })
    }

    pub fn sentence_texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(move |r| &self.text[r.clone()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub source_doc: Document,
    pub target_doc: Document,
    pub precomputed_scores: BTreeMap<String, f64>,
}

impl ParallelPair {
    pub fn id(&self) -> &str {
        &self.source_doc.id
    }

    pub fn domain(&self) -> &str {
        &self.source_doc.domain
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParallelCorpus {
    pub pairs: Vec<ParallelPair>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Domain labels in first-seen order.
    pub fn domains(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in &self.pairs {
            if seen.insert(p.domain()) {
                out.push(p.domain().to_string());
            }
        }
        out
    }

    pub fn domain_pairs<'a>(&'a self, domain: &'a str) -> impl Iterator<Item = &'a ParallelPair> + 'a {
        self.pairs.iter().filter(move |p| p.domain() == domain)
    }

    pub fn documents(&self, language: Language) -> impl Iterator<Item = &Document> {
        self.pairs.iter().map(move |p| match language {
            Language::Source => &p.source_doc,
            Language::Target => &p.target_doc,
        })
    }
}

/// Ingestion knobs. Defaults match the documented JSONL schema.
#[derive(Debug, Clone, Default)]
pub struct FormatConfig {
    /// Drop the `scores` object instead of attaching it to the pair.
    pub ignore_scores: bool,
}

pub fn load_corpus(path: impl AsRef<Path>, config: &FormatConfig) -> Result<ParallelCorpus> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&raw, config)
}

pub fn parse_corpus(raw: &str, config: &FormatConfig) -> Result<ParallelCorpus> {
    let mut pairs = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Malformed {
            line: line_no,
            message: "record is not a JSON object".into(),
        })?;
        let field = |name: &'static str| -> Result<&str> {
            match obj.get(name) {
                None | Some(Value::Null) => Err(Error::MissingField { line: line_no, field: name }),
                Some(Value::String(s)) => Ok(s.as_str()),
                Some(_) => Err(Error::Malformed {
                    line: line_no,
                    message: format!("field `{name}` must be a string"),
                }),
            }
        };
        let id = field("id")?;
        let domain = field("domain")?;
        let source = field("source")?;
        let target = field("target")?;

        let mut scores = BTreeMap::new();
        if let Some(v) = obj.get("scores") {
            if !config.ignore_scores && !v.is_null() {
                let map = v.as_object().ok_or_else(|| Error::Malformed {
                    line: line_no,
                    message: "`scores` must be an object".into(),
                })?;
                for (name, score) in map {
                    let s = score.as_f64().ok_or_else(|| Error::Malformed {
                        line: line_no,
                        message: format!("score `{name}` is not a number"),
                    })?;
                    scores.insert(name.clone(), s);
                }
            }
        }

        if !ids.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                line: line_no,
                id: id.to_string(),
            });
        }
        let make = |lang, text: &str| {
            Document::new(id, domain, lang, text).map_err(|_| Error::Malformed {
                line: line_no,
                message: format!("{lang} text is blank"),
            })
        };
        pairs.push(ParallelPair {
            source_doc: make(Language::Source, source)?,
            target_doc: make(Language::Target, target)?,
            precomputed_scores: scores,
        });
    }
    Ok(ParallelCorpus { pairs })
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    domain: &'a str,
    source: &'a str,
    target: &'a str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    scores: &'a BTreeMap<String, f64>,
}

/// Writes the corpus back in the JSONL ingestion format.
pub fn write_corpus<W: Write>(corpus: &ParallelCorpus, mut out: W) -> Result<()> {
    for p in &corpus.pairs {
        let rec = RecordOut {
            id: p.id(),
            domain: p.domain(),
            source: &p.source_doc.text,
            target: &p.target_doc.text,
            scores: &p.precomputed_scores,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '。' | '！' | '？' | '．')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '」' | '』')
}

/// Splits `text` into sentence byte ranges.
///
/// ASCII terminators close a sentence only when followed by whitespace or the
/// end of the text (so "3.5" stays intact); full-width terminators always do.
/// Runs of terminators and trailing closing quotes stay with their sentence.
pub fn split_sentences(text: &str, _language: Language) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut ranges = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(pos);
        }
        if is_terminator(c) {
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
            let full_width = !c.is_ascii();
            if at_boundary || full_width {
                let end = if j == chars.len() { text.len() } else { chars[j].0 };
                ranges.push(start.take().unwrap()..end);
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let end = s + text[s..].trim_end().len();
        ranges.push(s..end);
    }
    ranges
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LanguageTotals {
    pub characters: u64,
    pub words: u64,
    pub unique_words: u64,
    pub sentences: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LanguageAverages {
    /// `None` when the language side has no sentences.
    pub chars_per_sentence: Option<f64>,
    pub words_per_sentence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub domain: String,
    pub source: LanguageTotals,
    pub target: LanguageTotals,
    pub source_avg: LanguageAverages,
    pub target_avg: LanguageAverages,
    pub pair_count: u64,
}

#[derive(Default)]
struct Accum<'a> {
    totals: LanguageTotals,
    vocab: HashSet<&'a str>,
}

impl<'a> Accum<'a> {
    fn add(&mut self, doc: &'a Document) {
        self.totals.characters += doc.text.chars().filter(|c| !c.is_whitespace()).count() as u64;
        for w in doc.text.split_whitespace() {
            self.totals.words += 1;
            self.vocab.insert(w);
        }
        self.totals.sentences += doc.sentences.len() as u64;
    }

    fn finish(mut self) -> (LanguageTotals, LanguageAverages) {
        self.totals.unique_words = self.vocab.len() as u64;
        let t = self.totals;
        let avg = if t.sentences > 0 {
            LanguageAverages {
                chars_per_sentence: Some(t.characters as f64 / t.sentences as f64),
                words_per_sentence: Some(t.words as f64 / t.sentences as f64),
            }
        } else {
            LanguageAverages::default()
        };
        (t, avg)
    }
}

/// Per-domain character, word, and sentence statistics, in first-seen domain order.
///
/// Characters exclude whitespace; words are maximal non-whitespace runs;
/// unique words are distinct surface forms, case-sensitive.
pub fn compute_stats(corpus: &ParallelCorpus) -> Result<Vec<CorpusStats>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no pairs"));
    }
    let mut out = Vec::new();
    for domain in corpus.domains() {
        let mut src = Accum::default();
        let mut tgt = Accum::default();
        let mut pairs = 0u64;
        for p in corpus.domain_pairs(&domain) {
            src.add(&p.source_doc);
            tgt.add(&p.target_doc);
            pairs += 1;
        }
        let (source, source_avg) = src.finish();
        let (target, target_avg) = tgt.finish();
        out.push(CorpusStats {
            domain,
            source,
            target,
            source_avg,
            target_avg,
            pair_count: pairs,
        });
    }
    Ok(out)
}
