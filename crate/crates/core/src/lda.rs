//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! Both Dirichlet priors are symmetric with components `1/K`. Documents are
//! swept in `doc_id` order and each document draws from its own RNG stream
//! derived from `(seed, doc_id)`, so a fit does not depend on the order in
//! which documents are supplied. `phi` and `theta` are read off the final
//! sampler state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::coherence_cv;
use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::knee::{kneedle, Knee};
use crate::tokenize::TokenizedDocument;
use crate::topic::{top_entries, ModelKind, TopicRepresentation, WeightSemantics, TOPIC_SIZE};
use crate::vectorize::VocabIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    /// `K x |vocab|`, rows sum to one.
    pub phi: Vec<Vec<f64>>,
    /// One row per kept document, rows sum to one.
    pub theta: Vec<Vec<f64>>,
    /// Ids of the kept documents, in input order.
    pub doc_ids: Vec<String>,
    /// Ids of documents dropped for having no in-vocabulary token.
    pub dropped: Vec<String>,
    /// Final topic label of every in-vocabulary token, per kept document.
    pub assignments: Vec<Vec<usize>>,
    pub vocab: Vec<String>,
    pub language: Language,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
}

pub(crate) fn stream_seed(seed: u64, key: &str) -> u64 {
    // FNV-1a, stable across platforms and toolchains
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn fit_lda(
    docs: &[TokenizedDocument],
    vocab: &VocabIndex,
    k: usize,
    seed: u64,
    iterations: usize,
) -> Result<LdaModel> {
    if k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    if iterations == 0 {
        return Err(Error::Parameter("iterations must be at least 1".into()));
    }
    let v = vocab.len();
    let alpha = 1.0 / k as f64;
    let eta = 1.0 / k as f64;

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for d in docs {
        let words: Vec<usize> = d.tokens.iter().filter_map(|t| vocab.get(t)).collect();
        if words.is_empty() {
            log::warn!("dropping document `{}`: no in-vocabulary tokens", d.doc_id);
            dropped.push(d.doc_id.clone());
        } else {
            kept.push((d.doc_id.clone(), words));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput("no document has an in-vocabulary token"));
    }

    let mut sweep: Vec<usize> = (0..kept.len()).collect();
    sweep.sort_by(|&a, &b| kept[a].0.cmp(&kept[b].0).then(a.cmp(&b)));

    let mut rngs: Vec<ChaCha8Rng> = kept
        .iter()
        .map(|(id, _)| ChaCha8Rng::seed_from_u64(stream_seed(seed, id)))
        .collect();
    let mut n_dk = vec![vec![0u32; k]; kept.len()];
    let mut n_kw = vec![vec![0u32; v]; k];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<usize>> = kept.iter().map(|(_, w)| vec![0; w.len()]).collect();

    for &d in &sweep {
        for (i, &w) in kept[d].1.iter().enumerate() {
            let t = rngs[d].random_range(0..k);
            z[d][i] = t;
            n_dk[d][t] += 1;
            n_kw[t][w] += 1;
            n_k[t] += 1;
        }
    }

    let v_eta = v as f64 * eta;
    let mut weights = vec![0.0; k];
    for _ in 0..iterations {
        for &d in &sweep {
            let (_, words) = &kept[d];
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + eta) / (n_k[t] as f64 + v_eta);
                    weights[t] = total;
                }
                let u = rngs[d].random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let phi = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + v_eta;
            (0..v).map(|w| (n_kw[t][w] as f64 + eta) / denom).collect()
        })
        .collect();
    let theta = kept
        .iter()
        .enumerate()
        .map(|(d, (_, words))| {
            let denom = words.len() as f64 + k as f64 * alpha;
            (0..k).map(|t| (n_dk[d][t] as f64 + alpha) / denom).collect()
        })
        .collect();

    Ok(LdaModel {
        k,
        alpha,
        eta,
        phi,
        theta,
        doc_ids: kept.into_iter().map(|(id, _)| id).collect(),
        dropped,
        assignments: z,
        vocab: vocab.tokens.clone(),
        language: vocab.language,
        seed,
        iterations,
        burn_in: iterations / 2,
    })
}

impl LdaModel {
    /// Indices of the `n` most probable words of topic `t`.
    pub fn top_word_indices(&self, t: usize, n: usize) -> Vec<usize> {
        let row = &self.phi[t];
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }

    pub fn top_words(&self, t: usize, n: usize) -> Vec<&str> {
        self.top_word_indices(t, n).into_iter().map(|i| self.vocab[i].as_str()).collect()
    }

    /// Mean of `theta` over documents, per topic.
    pub fn topic_shares(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.k];
        for row in &self.theta {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.theta.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn summary(&self, top_n: usize) -> LdaSummary {
        LdaSummary {
            k: self.k,
            alpha: self.alpha,
            eta: self.eta,
            seed: self.seed,
            iterations: self.iterations,
            topic_shares: self.topic_shares(),
            topics: (0..self.k)
                .map(|t| {
                    self.top_word_indices(t, top_n)
                        .into_iter()
                        .map(|i| (self.vocab[i].clone(), self.phi[t][i]))
                        .collect()
                })
                .collect(),
            dropped: self.dropped.clone(),
        }
    }
}

/// Truncated model dump for reports.
#[derive(Debug, Clone, Serialize)]
pub struct LdaSummary {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub topic_shares: Vec<f64>,
    pub topics: Vec<Vec<(String, f64)>>,
    pub dropped: Vec<String>,
}

/// Topic with the largest mean document share (lowest index on ties),
/// weighted by its word probabilities.
pub fn lda_representative_topic(model: &LdaModel, domain: &str) -> Result<TopicRepresentation> {
    if model.vocab.len() < TOPIC_SIZE {
        return Err(Error::VocabularyTooSmall {
            size: model.vocab.len(),
            required: TOPIC_SIZE,
        });
    }
    let shares = model.topic_shares();
    let mut best = 0;
    for (t, s) in shares.iter().enumerate() {
        if *s > shares[best] {
            best = t;
        }
    }
    let scored: Vec<(&str, f64)> = model
        .vocab
        .iter()
        .map(String::as_str)
        .zip(model.phi[best].iter().copied())
        .collect();
    TopicRepresentation::new(
        ModelKind::Lda,
        model.language,
        domain,
        top_entries(&scored, TOPIC_SIZE),
        WeightSemantics::WordProbability,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceCurve {
    pub ks: Vec<usize>,
    pub scores: Vec<f64>,
    pub k_star: usize,
    pub degenerate: bool,
    #[serde(skip)]
    pub knee: Option<Knee>,
}

impl CoherenceCurve {
    /// Writes `k,cv` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,cv")?;
        for (k, s) in self.ks.iter().zip(&self.scores) {
            writeln!(out, "{k},{s}")?;
        }
        Ok(())
    }
}

/// Knee of a coherence curve. With fewer than three points the best score
/// wins instead.
pub fn select_from_scores(ks: Vec<usize>, scores: Vec<f64>) -> Result<CoherenceCurve> {
    if ks.is_empty() || ks.len() != scores.len() {
        return Err(Error::EmptyInput("coherence curve has no points"));
    }
    if ks.len() < 3 {
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        return Ok(CoherenceCurve {
            k_star: ks[best],
            degenerate: ks.len() == 1,
            ks,
            scores,
            knee: None,
        });
    }
    let knee = kneedle(&scores)?;
    Ok(CoherenceCurve {
        k_star: ks[knee.k_star - 1],
        degenerate: knee.degenerate,
        ks,
        scores,
        knee: Some(knee),
    })
}

#[derive(Debug, Clone)]
pub struct LdaConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub iterations: usize,
    pub window: usize,
    /// Words per topic fed to the coherence measure.
    pub coherence_top_n: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k_min: 2,
            k_max: 30,
            iterations: 200,
            window: crate::coherence::DEFAULT_WINDOW,
            coherence_top_n: 10,
            seed: 0,
        }
    }
}

fn mean_coherence(model: &LdaModel, docs: &[TokenizedDocument], cfg: &LdaConfig) -> Result<f64> {
    let top_n = cfg.coherence_top_n.min(model.vocab.len());
    let mut total = 0.0;
    for t in 0..model.k {
        total += coherence_cv(&model.top_words(t, top_n), docs, cfg.window)?.score;
    }
    Ok(total / model.k as f64)
}

fn fit_range(
    docs: &[TokenizedDocument],
    vocab: &VocabIndex,
    cfg: &LdaConfig,
) -> Result<(CoherenceCurve, Vec<LdaModel>)> {
    if cfg.k_min < 2 || cfg.k_max > 30 || cfg.k_min > cfg.k_max {
        return Err(Error::Parameter(format!(
            "k range {}..={} must lie within 2..=30",
            cfg.k_min, cfg.k_max
        )));
    }
    let fits: Vec<(usize, Result<(f64, LdaModel)>)> = (cfg.k_min..=cfg.k_max)
        .into_par_iter()
        .map(|k| {
            let fit = fit_lda(docs, vocab, k, cfg.seed, cfg.iterations)
                .and_then(|m| Ok((mean_coherence(&m, docs, cfg)?, m)));
            (k, fit)
        })
        .collect();
    let mut ks = Vec::new();
    let mut scores = Vec::new();
    let mut models = Vec::new();
    let mut last_err = None;
    for (k, fit) in fits {
        match fit {
            Ok((score, model)) => {
                ks.push(k);
                scores.push(score);
                models.push(model);
            }
            Err(e) => {
                log::warn!("LDA fit with K={k} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    if models.is_empty() {
        return Err(last_err.unwrap_or(Error::EmptyInput("no LDA fit succeeded")));
    }
    Ok((select_from_scores(ks, scores)?, models))
}

/// Fits one model per K in the configured range and picks K at the knee of
/// the mean-coherence curve.
pub fn select_k_lda(docs: &[TokenizedDocument], vocab: &VocabIndex, cfg: &LdaConfig) -> Result<CoherenceCurve> {
    fit_range(docs, vocab, cfg).map(|(curve, _)| curve)
}

#[derive(Debug, Clone)]
pub struct LdaFit {
    pub curve: CoherenceCurve,
    pub model: LdaModel,
    pub topic: TopicRepresentation,
}

pub fn fit_lda_selected(
    domain: &str,
    docs: &[TokenizedDocument],
    vocab: &VocabIndex,
    cfg: &LdaConfig,
) -> Result<LdaFit> {
    let (curve, models) = fit_range(docs, vocab, cfg)?;
    let model = models
        .into_iter()
        .find(|m| m.k == curve.k_star)
        .expect("selected K comes from a fitted model");
    let topic = lda_representative_topic(&model, domain)?;
    Ok(LdaFit { curve, model, topic })
}
