//! Cross-lingual matching of representative topics and their cosine score.
//!
//! Each source token, in rank order, looks up its primary dictionary
//! candidate among the target topic's tokens. Claimed target tokens are
//! never reassigned, so higher-ranked source tokens win conflicts. Proper
//! nouns get a second chance through format, alias and romanization
//! variants.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::topic::{ModelKind, TopicRepresentation, TOPIC_SIZE};

#[derive(Debug, Clone, PartialEq)]
pub struct DictEntry {
    /// Target-language candidates; the first is the primary one.
    pub candidates: Vec<String>,
    pub proper_noun: bool,
}

#[derive(Debug, Clone, Default)]
pub struct BilingualDictionary {
    entries: HashMap<String, DictEntry>,
    pub variants: VariantTables,
}

/// Alias groups and romanization rewrites used for proper-noun matching.
#[derive(Debug, Clone, Default)]
pub struct VariantTables {
    /// Normalized surface form to alias group id.
    alias_group: HashMap<String, usize>,
    /// `(from, to)` rewrites applied in order to normalized strings.
    romanization: Vec<(String, String)>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

impl BilingualDictionary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    /// Parses `source<TAB>cand1|cand2|...[<TAB>flags]` lines; a `PN` flag
    /// marks a proper noun. Blank lines and `#` comments are skipped.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (line, l) in data_lines(raw) {
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 || cols[0].trim().is_empty() {
                return Err(Error::Malformed {
                    line,
                    message: "expected `source<TAB>candidates[<TAB>flags]`".into(),
                });
            }
            let candidates: Vec<String> = cols[1]
                .split('|')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect();
            if candidates.is_empty() {
                return Err(Error::Malformed {
                    line,
                    message: "empty candidate list".into(),
                });
            }
            let proper_noun = cols.get(2).is_some_and(|f| f.split(',').any(|x| x.trim() == "PN"));
            let source = cols[0].trim().to_string();
            if entries.insert(source.clone(), DictEntry { candidates, proper_noun }).is_some() {
                return Err(Error::DuplicateId { line, id: source });
            }
        }
        Ok(BilingualDictionary {
            entries,
            variants: VariantTables::default(),
        })
    }

    pub fn with_variants(mut self, variants: VariantTables) -> Self {
        self.variants = variants;
        self
    }

    pub fn get(&self, source: &str) -> Option<&DictEntry> {
        self.entries.get(source)
    }

    pub fn insert(&mut self, source: impl Into<String>, entry: DictEntry) {
        self.entries.insert(source.into(), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Eligible for variant matching: flagged `PN`, or a primary candidate
    /// that looks like a name or an acronym.
    pub fn is_proper_noun(&self, source: &str) -> bool {
        self.get(source)
            .is_some_and(|e| e.proper_noun || looks_like_name(&e.candidates[0]))
    }
}

fn looks_like_name(s: &str) -> bool {
    let words: Vec<&str> = s.split([' ', '_']).filter(|w| !w.is_empty()).collect();
    let capitalized = words.len() >= 2 && words.iter().all(|w| w.chars().next().is_some_and(char::is_uppercase));
    let letters: Vec<char> = s.chars().filter(|c| c.is_alphabetic()).collect();
    let acronym = s.chars().count() >= 2
        && !letters.is_empty()
        && letters.iter().all(|c| c.is_uppercase())
        && s.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '.');
    capitalized || acronym
}

/// Casefolded with underscores read as spaces.
pub fn exact_key(s: &str) -> String {
    s.replace('_', " ").to_lowercase()
}

/// Casefolded with hyphens, spaces, periods and underscores removed.
pub fn format_key(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '-' | ' ' | '.' | '_'))
        .flat_map(char::to_lowercase)
        .collect()
}

impl VariantTables {
    pub fn load(aliases: Option<&Path>, romanization: Option<&Path>) -> Result<Self> {
        let mut t = VariantTables::default();
        if let Some(p) = aliases {
            t.add_aliases(&read(p)?)?;
        }
        if let Some(p) = romanization {
            t.add_romanization(&read(p)?)?;
        }
        Ok(t)
    }

    /// `canonical<TAB>variant` lines. Every spelling in a chain of lines
    /// ends up in one group, and membership is symmetric.
    pub fn add_aliases(&mut self, raw: &str) -> Result<()> {
        for (line, l) in data_lines(raw) {
            let Some((a, b)) = l.split_once('\t') else {
                return Err(Error::Malformed {
                    line,
                    message: "expected `canonical<TAB>variant`".into(),
                });
            };
            let (a, b) = (format_key(a), format_key(b));
            if a.is_empty() || b.is_empty() {
                return Err(Error::Malformed {
                    line,
                    message: "empty alias".into(),
                });
            }
            match (self.alias_group.get(&a).copied(), self.alias_group.get(&b).copied()) {
                (Some(ga), Some(gb)) if ga != gb => {
                    for g in self.alias_group.values_mut() {
                        if *g == gb {
                            *g = ga;
                        }
                    }
                }
                (Some(g), None) => {
                    self.alias_group.insert(b, g);
                }
                (None, Some(g)) => {
                    self.alias_group.insert(a, g);
                }
                (None, None) => {
                    let g = self.alias_group.len();
                    self.alias_group.insert(a, g);
                    self.alias_group.insert(b, g);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// `from<TAB>to` rewrites such as `eo<TAB>u`.
    pub fn add_romanization(&mut self, raw: &str) -> Result<()> {
        for (line, l) in data_lines(raw) {
            let Some((from, to)) = l.split_once('\t') else {
                return Err(Error::Malformed {
                    line,
                    message: "expected `from<TAB>to`".into(),
                });
            };
            let from = from.trim().to_lowercase();
            if from.is_empty() {
                return Err(Error::Malformed {
                    line,
                    message: "empty romanization pattern".into(),
                });
            }
            self.romanization.push((from, to.trim().to_lowercase()));
        }
        Ok(())
    }

    fn aliased(&self, a: &str, b: &str) -> bool {
        matches!((self.alias_group.get(a), self.alias_group.get(b)), (Some(x), Some(y)) if x == y)
    }

    fn romanized(&self, s: &str) -> String {
        let mut s = s.to_string();
        for (from, to) in &self.romanization {
            s = s.replace(from.as_str(), to);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    Exact,
    ProperNounVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantRule {
    Format,
    Alias,
    Romanization,
}

/// First unclaimed target matching `candidate` under the earliest variant
/// rule that matches anything.
pub fn variant_match(candidate: &str, targets: &[&str], tables: &VariantTables, claimed: &[bool]) -> Option<(usize, VariantRule)> {
    let key = format_key(candidate);
    if key.is_empty() {
        return None;
    }
    let keys: Vec<String> = targets.iter().map(|t| format_key(t)).collect();
    let open = |j: usize| !claimed.get(j).copied().unwrap_or(false);
    let first = |pred: &dyn Fn(&str) -> bool| (0..targets.len()).find(|&j| open(j) && pred(&keys[j]));
    if let Some(j) = first(&|t| t == key) {
        return Some((j, VariantRule::Format));
    }
    if let Some(j) = first(&|t| tables.aliased(&key, t)) {
        return Some((j, VariantRule::Alias));
    }
    if !tables.romanization.is_empty() {
        let rk = tables.romanized(&key);
        if let Some(j) = first(&|t| tables.romanized(t) == rk) {
            return Some((j, VariantRule::Romanization));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub source_index: usize,
    pub target_index: usize,
    pub match_kind: MatchKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rule: Option<VariantRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub pairs: Vec<AlignedPair>,
    pub unmatched_source: Vec<usize>,
    pub unmatched_target: Vec<usize>,
}

fn check_topic(t: &TopicRepresentation) -> Result<()> {
    if t.entries.len() != TOPIC_SIZE {
        return Err(Error::Parameter(format!(
            "topic must have {TOPIC_SIZE} entries, got {}",
            t.entries.len()
        )));
    }
    Ok(())
}

pub fn align(source: &TopicRepresentation, target: &TopicRepresentation, dict: &BilingualDictionary) -> Result<AlignmentResult> {
    check_topic(source)?;
    check_topic(target)?;
    let targets: Vec<&str> = target.tokens().collect();
    let target_keys: Vec<String> = targets.iter().map(|t| exact_key(t)).collect();
    let mut claimed = vec![false; targets.len()];
    let mut pairs = Vec::new();
    let mut unmatched_source = Vec::new();
    for (i, s) in source.tokens().enumerate() {
        let Some(entry) = dict.get(s) else {
            unmatched_source.push(i);
            continue;
        };
        let primary = &entry.candidates[0];
        let key = exact_key(primary);
        let exact = (0..targets.len()).find(|&j| !claimed[j] && target_keys[j] == key);
        let found = match exact {
            Some(j) => Some((j, MatchKind::Exact, None)),
            None if dict.is_proper_noun(s) => variant_match(primary, &targets, &dict.variants, &claimed)
                .map(|(j, rule)| (j, MatchKind::ProperNounVariant, Some(rule))),
            None => None,
        };
        match found {
            Some((j, match_kind, rule)) => {
                claimed[j] = true;
                pairs.push(AlignedPair {
                    source_index: i,
                    target_index: j,
                    match_kind,
                    rule,
                });
            }
            None => unmatched_source.push(i),
        }
    }
    Ok(AlignmentResult {
        pairs,
        unmatched_source,
        unmatched_target: (0..targets.len()).filter(|&j| !claimed[j]).collect(),
    })
}

/// Source weights placed at their matched target positions.
pub fn build_beta(alignment: &AlignmentResult, source: &TopicRepresentation, target: &TopicRepresentation) -> Vec<f64> {
    let mut beta = vec![0.0; target.entries.len().max(TOPIC_SIZE)];
    for p in &alignment.pairs {
        beta[p.target_index] = source.entries[p.source_index].weight;
    }
    beta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineScore {
    pub similarity: f64,
    /// Nothing matched; similarity is 0 by convention.
    pub no_match: bool,
}

pub fn cosine_score(beta: &[f64], alpha: &[f64]) -> Result<CosineScore> {
    if beta.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            actual: beta.len(),
        });
    }
    let aa: f64 = alpha.iter().map(|a| a * a).sum();
    if aa == 0.0 {
        return Err(Error::Degenerate("target topic weights are all zero".into()));
    }
    let bb: f64 = beta.iter().map(|b| b * b).sum();
    if bb == 0.0 {
        return Ok(CosineScore {
            similarity: 0.0,
            no_match: true,
        });
    }
    let dot: f64 = beta.iter().zip(alpha).map(|(b, a)| b * a).sum();
    Ok(CosineScore {
        similarity: (dot / (bb * aa).sqrt()).clamp(-1.0, 1.0),
        no_match: false,
    })
}

/// One matched pair with the tokens and weights behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePair {
    pub source_rank: usize,
    pub target_rank: usize,
    pub source_token: String,
    pub target_token: String,
    pub source_weight: f64,
    pub target_weight: f64,
    pub match_kind: MatchKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rule: Option<VariantRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedScore {
    pub domain: String,
    pub model_kind: ModelKind,
    pub similarity: f64,
    pub no_match: bool,
    pub beta: Vec<f64>,
    pub alpha_target: Vec<f64>,
    pub evidence: Vec<EvidencePair>,
    pub unmatched_source: Vec<String>,
    pub unmatched_target: Vec<String>,
}

impl AlignedScore {
    /// Cosine rebuilt from the evidence list alone.
    pub fn recompute_from_evidence(&self) -> f64 {
        let dot: f64 = self.evidence.iter().map(|e| e.source_weight * e.target_weight).sum();
        let bb: f64 = self.evidence.iter().map(|e| e.source_weight * e.source_weight).sum();
        let aa: f64 = self.alpha_target.iter().map(|a| a * a).sum();
        if bb == 0.0 || aa == 0.0 {
            0.0
        } else {
            (dot / (bb * aa).sqrt()).clamp(-1.0, 1.0)
        }
    }
}

pub fn score_pair(
    domain: &str,
    model_kind: ModelKind,
    source: &TopicRepresentation,
    target: &TopicRepresentation,
    dict: &BilingualDictionary,
) -> Result<AlignedScore> {
    for t in [source, target] {
        if t.domain != domain || t.model_kind != model_kind {
            return Err(Error::Parameter(format!(
                "topic for {}/{} does not belong to {domain}/{}",
                t.domain,
                t.model_kind.as_str(),
                model_kind.as_str()
            )));
        }
    }
    if source.language != Language::Source || target.language != Language::Target {
        return Err(Error::Parameter("expected a source-language and a target-language topic".into()));
    }
    let alignment = align(source, target, dict)?;
    let beta = build_beta(&alignment, source, target);
    let alpha = target.weights();
    let cos = cosine_score(&beta, &alpha)?;
    if cos.no_match {
        log::warn!("{domain}/{}: no source token matched", model_kind.as_str());
    }
    let evidence = alignment
        .pairs
        .iter()
        .map(|p| EvidencePair {
            source_rank: p.source_index + 1,
            target_rank: p.target_index + 1,
            source_token: source.entries[p.source_index].token.clone(),
            target_token: target.entries[p.target_index].token.clone(),
            source_weight: source.entries[p.source_index].weight,
            target_weight: target.entries[p.target_index].weight,
            match_kind: p.match_kind,
            rule: p.rule,
        })
        .collect();
    Ok(AlignedScore {
        domain: domain.to_string(),
        model_kind,
        similarity: cos.similarity,
        no_match: cos.no_match,
        beta,
        alpha_target: alpha,
        evidence,
        unmatched_source: alignment.unmatched_source.iter().map(|&i| source.entries[i].token.clone()).collect(),
        unmatched_target: alignment.unmatched_target.iter().map(|&j| target.entries[j].token.clone()).collect(),
    })
}
