//! Run configuration and the `stats`, `evaluate`, `correlate` and `bleu`
//! commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{score_pair, BilingualDictionary, VariantTables};
use crate::corpus::{compute_stats, load_corpus, FormatConfig, Language, ParallelCorpus, ParallelPair};
use crate::embed::{fit_embed, load_embeddings, EmbedConfig, EmbeddingSet};
use crate::error::{Error, Result};
use crate::lda::{fit_lda_selected, LdaConfig};
use crate::lsa::{fit_lsa, LsaConfig};
use crate::metrics::{bleu, correlation_matrix, BleuConfig, MetricSeries};
use crate::report::{
    domain_file_stem, read_summary, summary_columns, write_matrix, write_summary, Diagnostics, DomainReport,
    ModelReport, SummaryRow, SCHEMA_VERSION,
};
use crate::tokenize::{token_stats, AnalyzerRegistry, FallbackAnalyzer, SidecarAnalyzer, TokenizedDocument};
use crate::topic::ModelKind;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyzerConfig {
    /// Bundled lexicon matcher.
    Fallback { lexicon: PathBuf },
    /// Tokens precomputed by an external analyzer.
    Sidecar { tokens: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzersConfig {
    pub source: AnalyzerConfig,
    pub target: AnalyzerConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub path: PathBuf,
    pub aliases: Option<PathBuf>,
    pub romanization: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsaSection {
    pub k_max: usize,
    pub k_select_max: usize,
}

impl Default for LsaSection {
    fn default() -> Self {
        let d = LsaConfig::default();
        LsaSection {
            k_max: d.k_max,
            k_select_max: d.k_select_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub k_min: usize,
    pub k_max: usize,
    pub iterations: usize,
    pub window: usize,
    pub top_n: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSection {
            k_min: d.k_min,
            k_max: d.k_max,
            iterations: d.iterations,
            window: d.window,
            top_n: d.coherence_top_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub source_embeddings: Option<PathBuf>,
    pub target_embeddings: Option<PathBuf>,
    pub fallback_dim: usize,
    pub target_dim: usize,
    pub min_cluster_size: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        let d = EmbedConfig::default();
        EmbedSection {
            source_embeddings: None,
            target_embeddings: None,
            fallback_dim: d.fallback_dim,
            target_dim: d.target_dim,
            min_cluster_size: d.min_cluster_size,
        }
    }
}

/// Parsed run configuration. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub ignore_scores: bool,
    pub analyzers: AnalyzersConfig,
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub lsa: LsaSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub embed: EmbedSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn parse(raw: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(raw).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::parse(&raw, base)?;
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        if let Some(w) = overrides.workers {
            cfg.workers = Some(w);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out);
        for a in [&mut self.analyzers.source, &mut self.analyzers.target] {
            match a {
                AnalyzerConfig::Fallback { lexicon } => fix(lexicon),
                AnalyzerConfig::Sidecar { tokens } => fix(tokens),
            }
        }
        fix(&mut self.dictionary.path);
        for p in [
            &mut self.dictionary.aliases,
            &mut self.dictionary.romanization,
            &mut self.embed.source_embeddings,
            &mut self.embed.target_embeddings,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks that every input file exists and parameters are usable.
    pub fn validate(&self) -> Result<()> {
        let mut inputs = vec![&self.corpus, &self.dictionary.path];
        for a in [&self.analyzers.source, &self.analyzers.target] {
            inputs.push(match a {
                AnalyzerConfig::Fallback { lexicon } => lexicon,
                AnalyzerConfig::Sidecar { tokens } => tokens,
            });
        }
        inputs.extend(self.dictionary.aliases.iter());
        inputs.extend(self.dictionary.romanization.iter());
        inputs.extend(self.embed.source_embeddings.iter());
        inputs.extend(self.embed.target_embeddings.iter());
        for p in inputs {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(2..=30).contains(&self.lda.k_min) || !(self.lda.k_min..=30).contains(&self.lda.k_max) {
            return Err(Error::Config(format!(
                "LDA k range {}..={} must lie within 2..=30",
                self.lda.k_min, self.lda.k_max
            )));
        }
        if self.lda.iterations == 0 || self.lda.window < 2 || self.lda.top_n < 2 {
            return Err(Error::Config("LDA iterations, window and top_n are out of range".into()));
        }
        if self.lsa.k_max == 0 || self.embed.min_cluster_size < 2 || self.embed.target_dim == 0 {
            return Err(Error::Config("LSA k_max, embed min_cluster_size or target_dim out of range".into()));
        }
        Ok(())
    }

    pub fn lsa_config(&self) -> LsaConfig {
        LsaConfig {
            k_max: self.lsa.k_max,
            k_select_max: self.lsa.k_select_max,
            seed: self.seed,
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k_min: self.lda.k_min,
            k_max: self.lda.k_max,
            iterations: self.lda.iterations,
            window: self.lda.window,
            coherence_top_n: self.lda.top_n,
            seed: self.seed,
        }
    }

    pub fn embed_config(&self) -> EmbedConfig {
        EmbedConfig {
            fallback_dim: self.embed.fallback_dim,
            target_dim: self.embed.target_dim,
            min_cluster_size: self.embed.min_cluster_size,
            seed: self.seed,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w);
        }
        b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

/// What a command produced and which domains failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(String, String)>,
}

impl RunOutcome {
    /// 0 on full success, 1 when some domain failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Exit status for a command result: configuration-level errors are 2.
pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => 2,
    }
}

fn write_file(path: &Path, bytes: &[u8], outcome: &mut RunOutcome) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    outcome.written.push(path.to_path_buf());
    Ok(())
}

fn build_registry(cfg: &RunConfig) -> Result<AnalyzerRegistry> {
    let mut reg = AnalyzerRegistry::new();
    for (lang, a) in [(Language::Source, &cfg.analyzers.source), (Language::Target, &cfg.analyzers.target)] {
        let name = format!("{}-{}", lang.as_str(), if matches!(a, AnalyzerConfig::Fallback { .. }) { "fallback" } else { "sidecar" });
        match a {
            AnalyzerConfig::Fallback { lexicon } => reg.register(Box::new(FallbackAnalyzer::from_file(name, lang, lexicon)?))?,
            AnalyzerConfig::Sidecar { tokens } => reg.register(Box::new(SidecarAnalyzer::from_file(name, lang, tokens)?))?,
        }
    }
    Ok(reg)
}

fn tokenize_side(reg: &AnalyzerRegistry, pairs: &[&ParallelPair], lang: Language) -> Result<Vec<TokenizedDocument>> {
    let desc = reg
        .descriptors()
        .find(|d| d.language == lang)
        .cloned()
        .ok_or_else(|| Error::Config(format!("no analyzer for {lang}")))?;
    pairs
        .iter()
        .map(|p| {
            let doc = match lang {
                Language::Source => &p.source_doc,
                Language::Target => &p.target_doc,
            };
            reg.tokenize(doc, &desc)
        })
        .collect()
}

fn load_inputs(cfg: &RunConfig) -> Result<(ParallelCorpus, AnalyzerRegistry)> {
    let corpus = load_corpus(
        &cfg.corpus,
        &FormatConfig {
            ignore_scores: cfg.ignore_scores,
        },
    )
    .map_err(|e| Error::Config(format!("corpus {}: {e}", cfg.corpus.display())))?;
    let reg = build_registry(cfg).map_err(|e| Error::Config(e.to_string()))?;
    Ok((corpus, reg))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `stats/corpus_totals.csv`, `stats/sentence_averages.csv` and
/// `stats/noun_stats.csv`, one row per domain.
pub fn cmd_stats(cfg: &RunConfig) -> Result<RunOutcome> {
    let (corpus, reg) = load_inputs(cfg)?;
    let stats = compute_stats(&corpus)?;
    let dir = cfg.out.join("stats");
    let mut outcome = RunOutcome::default();

    let mut totals = csv::Writer::from_writer(Vec::new());
    totals.write_record([
        "domain", "pairs", "source_characters", "source_words", "source_unique_words", "source_sentences",
        "target_characters", "target_words", "target_unique_words", "target_sentences",
    ])?;
    let mut averages = csv::Writer::from_writer(Vec::new());
    averages.write_record([
        "domain", "source_chars_per_sentence", "source_words_per_sentence", "target_chars_per_sentence",
        "target_words_per_sentence",
    ])?;
    for s in &stats {
        let (a, b) = (&s.source, &s.target);
        totals.write_record([
            s.domain.clone(),
            s.pair_count.to_string(),
            a.characters.to_string(),
            a.words.to_string(),
            a.unique_words.to_string(),
            a.sentences.to_string(),
            b.characters.to_string(),
            b.words.to_string(),
            b.unique_words.to_string(),
            b.sentences.to_string(),
        ])?;
        averages.write_record([
            s.domain.clone(),
            opt(s.source_avg.chars_per_sentence),
            opt(s.source_avg.words_per_sentence),
            opt(s.target_avg.chars_per_sentence),
            opt(s.target_avg.words_per_sentence),
        ])?;
    }

    let mut nouns = csv::Writer::from_writer(Vec::new());
    nouns.write_record([
        "domain", "source_noun_tokens", "source_unique_nouns", "source_nouns_per_sentence", "target_noun_tokens",
        "target_unique_nouns", "target_nouns_per_sentence",
    ])?;
    for domain in corpus.domains() {
        let pairs: Vec<&ParallelPair> = corpus.domain_pairs(&domain).collect();
        let row = [Language::Source, Language::Target]
            .into_iter()
            .map(|lang| tokenize_side(&reg, &pairs, lang).and_then(|d| token_stats(&d)))
            .collect::<Result<Vec<_>>>();
        match row {
            Ok(s) => nouns.write_record([
                domain.clone(),
                s[0].total_tokens.to_string(),
                s[0].unique_tokens.to_string(),
                opt(s[0].avg_per_sentence),
                s[1].total_tokens.to_string(),
                s[1].unique_tokens.to_string(),
                opt(s[1].avg_per_sentence),
            ])?,
            Err(e) => {
                log::error!("{domain}: noun statistics failed: {e}");
                outcome.failures.push((domain.clone(), e.to_string()));
                nouns.write_record([domain.as_str(), "", "", "", "", "", ""])?;
            }
        }
    }

    for (name, w) in [("corpus_totals.csv", totals), ("sentence_averages.csv", averages), ("noun_stats.csv", nouns)] {
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        write_file(&dir.join(name), &bytes, &mut outcome)?;
    }
    Ok(outcome)
}

/// Everything `evaluate` produces for one domain.
pub struct DomainOutput {
    pub report: DomainReport,
    pub curves: Vec<(String, Vec<u8>)>,
}

struct Shared {
    reg: AnalyzerRegistry,
    dict: BilingualDictionary,
    embeddings: [Option<EmbeddingSet>; 2],
}

fn side_index(lang: Language) -> usize {
    match lang {
        Language::Source => 0,
        Language::Target => 1,
    }
}

/// Tokenize, fit the three topic models on both sides, and score each
/// model's topic pair.
fn evaluate_domain(cfg: &RunConfig, shared: &Shared, domain: &str, pairs: &[&ParallelPair]) -> Result<DomainOutput> {
    let mut fits = Vec::new();
    let mut curves = Vec::new();
    let stem = domain_file_stem(domain);
    for lang in [Language::Source, Language::Target] {
        let docs = tokenize_side(&shared.reg, pairs, lang)?;
        let lsa = fit_lsa(domain, &docs, &cfg.lsa_config())?;
        let lda = fit_lda_selected(domain, &docs, &lsa.vocab, &cfg.lda_config())?;
        let emb = fit_embed(domain, &docs, shared.embeddings[side_index(lang)].as_ref(), &cfg.embed_config())?;

        let mut buf = Vec::new();
        lsa.curve.write_csv(&mut buf).map_err(|e| Error::io("variance curve", e))?;
        curves.push((format!("{stem}_lsa_{}.csv", lang.as_str()), buf));
        let mut buf = Vec::new();
        lda.curve.write_csv(&mut buf).map_err(|e| Error::io("coherence curve", e))?;
        curves.push((format!("{stem}_lda_{}.csv", lang.as_str()), buf));

        let lsa_diag = Diagnostics {
            documents: docs.len(),
            vocab_size: lsa.vocab.len(),
            k_star: Some(lsa.k_star),
            degenerate: lsa.knee.as_ref().map(|k| k.degenerate),
            ..Diagnostics::default()
        };
        let lda_diag = Diagnostics {
            documents: docs.len(),
            vocab_size: lsa.vocab.len(),
            k_star: Some(lda.curve.k_star),
            degenerate: Some(lda.curve.degenerate),
            dropped_documents: lda.model.dropped.clone(),
            ..Diagnostics::default()
        };
        let emb_diag = Diagnostics {
            documents: docs.len(),
            vocab_size: emb.table.df.len(),
            cluster_sizes: Some(emb.clusters.sizes.clone()),
            noise: Some(emb.clusters.noise),
            retained_variance: Some(emb.retained_variance),
            distance_correlation: emb.distance_correlation,
            ..Diagnostics::default()
        };
        fits.push([(lsa.topic, lsa_diag), (lda.topic, lda_diag), (emb.topic, emb_diag)]);
    }
    let target = fits.pop().expect("two sides");
    let source = fits.pop().expect("two sides");
    let mut models = Vec::new();
    for ((kind, (st, sd)), (tt, td)) in ModelKind::ALL.into_iter().zip(source).zip(target) {
        let score = score_pair(domain, kind, &st, &tt, &shared.dict)?;
        models.push(ModelReport {
            model_kind: kind,
            source_topic: st,
            target_topic: tt,
            score,
            source_diagnostics: sd,
            target_diagnostics: td,
        });
    }

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for p in pairs {
        for (k, v) in &p.precomputed_scores {
            let e = sums.entry(k.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    Ok(DomainOutput {
        report: DomainReport {
            schema_version: SCHEMA_VERSION,
            domain: domain.to_string(),
            seed: cfg.seed,
            pairs: pairs.len(),
            analyzers: shared.reg.descriptors().cloned().collect(),
            models,
            baselines: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        },
        curves,
    })
}

/// Writes `reports/<domain>.json`, `curves/*.csv` and `summary.csv`.
/// A failing domain is logged and reported without stopping the others.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<RunOutcome> {
    let (corpus, reg) = load_inputs(cfg)?;
    let variants = VariantTables::load(cfg.dictionary.aliases.as_deref(), cfg.dictionary.romanization.as_deref())
        .map_err(|e| Error::Config(e.to_string()))?;
    let dict = BilingualDictionary::load(&cfg.dictionary.path)
        .map_err(|e| Error::Config(format!("dictionary: {e}")))?
        .with_variants(variants);
    let load = |p: &Option<PathBuf>| p.as_ref().map(load_embeddings).transpose().map_err(|e| Error::Config(e.to_string()));
    let shared = Shared {
        reg,
        dict,
        embeddings: [load(&cfg.embed.source_embeddings)?, load(&cfg.embed.target_embeddings)?],
    };

    let domains = corpus.domains();
    let baseline_names: Vec<String> = corpus
        .pairs
        .iter()
        .flat_map(|p| p.precomputed_scores.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let results: Vec<(String, Result<DomainOutput>)> = cfg.pool()?.install(|| {
        domains
            .par_iter()
            .map(|d| {
                let pairs: Vec<&ParallelPair> = corpus.domain_pairs(d).collect();
                (d.clone(), evaluate_domain(cfg, &shared, d, &pairs))
            })
            .collect()
    });

    let mut outcome = RunOutcome::default();
    let mut rows = Vec::new();
    for (domain, result) in results {
        match result {
            Ok(out) => {
                let stem = domain_file_stem(&domain);
                let path = cfg.out.join("reports").join(format!("{stem}.json"));
                write_file(&path, out.report.to_json()?.as_bytes(), &mut outcome)?;
                for (name, bytes) in &out.curves {
                    write_file(&cfg.out.join("curves").join(name), bytes, &mut outcome)?;
                }
                let mut values = out.report.baselines.clone();
                for m in &out.report.models {
                    values.insert(m.model_kind.as_str().to_string(), m.score.similarity);
                }
                rows.push(SummaryRow {
                    domain,
                    values,
                    status: "ok".into(),
                });
            }
            Err(e) => {
                log::error!("domain {domain} failed: {e}");
                outcome.failures.push((domain.clone(), e.to_string()));
                rows.push(SummaryRow {
                    domain,
                    values: BTreeMap::new(),
                    status: "failed".into(),
                });
            }
        }
    }
    let mut buf = Vec::new();
    write_summary(&summary_columns(&baseline_names), &rows, &mut buf)?;
    write_file(&cfg.out.join("summary.csv"), &buf, &mut outcome)?;
    Ok(outcome)
}

/// Reads `summary.csv` from the output directory and writes
/// `correlation.csv` over the domains that evaluated successfully.
pub fn cmd_correlate(cfg: &RunConfig) -> Result<RunOutcome> {
    let path = cfg.out.join("summary.csv");
    let raw = fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {} (run `evaluate` first): {e}", path.display())))?;
    let (columns, rows) = read_summary(&raw)?;
    let complete: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.status == "ok" && columns.iter().all(|c| r.values.contains_key(c)))
        .collect();
    let mut outcome = RunOutcome::default();
    if complete.len() < 3 {
        outcome.failures.push((
            "*".into(),
            format!("correlation needs at least 3 complete domains, found {}", complete.len()),
        ));
    }
    let series: Vec<MetricSeries> = columns
        .iter()
        .map(|c| MetricSeries {
            name: c.clone(),
            values: complete.iter().map(|r| (r.domain.clone(), r.values[c])).collect(),
        })
        .collect();
    let matrix = correlation_matrix(&series);
    let mut buf = Vec::new();
    write_matrix(&columns, &matrix, &mut buf)?;
    write_file(&cfg.out.join("correlation.csv"), &buf, &mut outcome)?;
    Ok(outcome)
}

#[derive(Deserialize)]
struct BleuRecord {
    hyp: Vec<String>,
    refs: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct BleuLine<'a> {
    line: usize,
    #[serde(flatten)]
    breakdown: Option<&'a crate::metrics::BleuBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Scores every `{"hyp": [..], "refs": [[..]]}` line and returns one JSON
/// line per input; unscorable lines carry an `error` field.
pub fn cmd_bleu(raw: &str, max_order: usize) -> Result<(String, RunOutcome)> {
    let cfg = BleuConfig::uniform(max_order)?;
    let mut out = String::new();
    let mut outcome = RunOutcome::default();
    for (i, line) in raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let result = serde_json::from_str::<BleuRecord>(line)
            .map_err(Error::from)
            .and_then(|r| bleu(&r.hyp, &r.refs, &cfg));
        let json = match &result {
            Ok(b) => serde_json::to_string(&BleuLine {
                line: i + 1,
                breakdown: Some(b),
                error: None,
            })?,
            Err(e) => {
                outcome.failures.push((format!("line {}", i + 1), e.to_string()));
                serde_json::to_string(&BleuLine {
                    line: i + 1,
                    breakdown: None,
                    error: Some(e.to_string()),
                })?
            }
        };
        out.push_str(&json);
        out.push('\n');
    }
    Ok((out, outcome))
}
