//! Sentence BLEU with clipped n-gram precision and no smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BleuConfig {
    pub max_order: usize,
    pub weights: Vec<f64>,
}

impl BleuConfig {
    pub fn uniform(max_order: usize) -> Result<Self> {
        Self::new(vec![1.0 / max_order as f64; max_order])
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Parameter("BLEU needs at least one n-gram order".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parameter("BLEU weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("BLEU weights sum to {total}, not 1")));
        }
        Ok(BleuConfig {
            max_order: weights.len(),
            weights,
        })
    }
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig::uniform(4).expect("uniform weights are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    /// Modified precision per order, starting at unigrams.
    pub precisions: Vec<f64>,
    pub clipped_matches: Vec<usize>,
    pub hypothesis_ngrams: Vec<usize>,
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
    pub score: f64,
    /// Some precision is zero, so the score is zero.
    pub zero_precision: bool,
    /// The hypothesis is shorter than the highest order.
    pub short_hypothesis: bool,
}

fn ngram_counts(tokens: &[u32], n: usize) -> HashMap<&[u32], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    counts
}

/// Reference length closest to `hyp_len`, the shorter one on ties.
pub fn effective_reference_length(hyp_len: usize, ref_lens: impl IntoIterator<Item = usize>) -> Option<usize> {
    ref_lens
        .into_iter()
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
}

pub fn bleu<S: AsRef<str>, R: AsRef<[S]>>(hypothesis: &[S], references: &[R], cfg: &BleuConfig) -> Result<BleuBreakdown> {
    if hypothesis.is_empty() {
        return Err(Error::EmptyInput("BLEU hypothesis is empty"));
    }
    let refs: Vec<&[S]> = references.iter().map(AsRef::as_ref).filter(|r| !r.is_empty()).collect();
    if refs.is_empty() {
        return Err(Error::EmptyInput("BLEU needs a non-empty reference"));
    }
    // interned ids make n-gram keys plain slices
    fn intern<'a, S: AsRef<str>>(toks: &'a [S], ids: &mut HashMap<&'a str, u32>) -> Vec<u32> {
        toks.iter()
            .map(|t| {
                let next = ids.len() as u32;
                *ids.entry(t.as_ref()).or_insert(next)
            })
            .collect()
    }
    let mut ids = HashMap::new();
    let hyp_ids = intern(hypothesis, &mut ids);
    let ref_ids: Vec<Vec<u32>> = refs.iter().map(|r| intern(r, &mut ids)).collect();
    let h = hypothesis.len();
    let mut precisions = Vec::with_capacity(cfg.max_order);
    let mut clipped_matches = Vec::with_capacity(cfg.max_order);
    let mut hypothesis_ngrams = Vec::with_capacity(cfg.max_order);
    for n in 1..=cfg.max_order {
        let hyp = ngram_counts(&hyp_ids, n);
        let total = h.saturating_sub(n - 1);
        let mut max_ref: HashMap<&[u32], usize> = HashMap::new();
        for r in &ref_ids {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_default();
                *e = (*e).max(c);
            }
        }
        let matched: usize = hyp
            .iter()
            .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        clipped_matches.push(matched);
        hypothesis_ngrams.push(total);
        precisions.push(if total == 0 { 0.0 } else { matched as f64 / total as f64 });
    }
    let r = effective_reference_length(h, refs.iter().map(|r| r.len())).expect("refs is non-empty");
    let brevity_penalty = if h > r { 1.0 } else { (1.0 - r as f64 / h as f64).exp() };
    let zero_precision = precisions.contains(&0.0);
    let score = if zero_precision {
        0.0
    } else {
        let log_sum: f64 = cfg.weights.iter().zip(&precisions).map(|(w, p)| w * p.ln()).sum();
        brevity_penalty * log_sum.exp()
    };
    Ok(BleuBreakdown {
        precisions,
        clipped_matches,
        hypothesis_ngrams,
        brevity_penalty,
        hypothesis_length: h,
        reference_length: r,
        score,
        zero_precision,
        short_hypothesis: cfg.max_order > h,
    })
}
