//! C_v-style topic coherence from sliding-window co-occurrence.
//!
//! Windows of `window` tokens advance one token at a time and never cross a
//! document boundary; a document shorter than the window is one window.
//! Each top word gets a context vector of its NPMI against every top word,
//! and the score is the mean cosine over all unordered pairs of vectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tokenize::TokenizedDocument;

pub const DEFAULT_WINDOW: usize = 10;
pub const NPMI_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coherence {
    pub score: f64,
    /// Top words never seen in the corpus; their pairs contribute cosine 0.
    pub missing: Vec<String>,
}

/// Window counts for a fixed word set.
#[derive(Debug, Clone)]
pub(crate) struct WindowCounts {
    pub windows: u64,
    pub single: Vec<u64>,
    /// Row-major `n x n`; the diagonal mirrors `single`.
    pub joint: Vec<u64>,
}

pub(crate) fn window_counts(words: &[&str], docs: &[TokenizedDocument], window: usize) -> WindowCounts {
    let n = words.len();
    let mut counts = WindowCounts {
        windows: 0,
        single: vec![0; n],
        joint: vec![0; n * n],
    };
    let slot = |tok: &str| words.iter().position(|w| *w == tok);
    let mut in_window = vec![0usize; n];
    let mut present = Vec::with_capacity(n);
    for doc in docs {
        let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| slot(t)).collect();
        if ids.is_empty() {
            continue;
        }
        let width = window.min(ids.len());
        in_window.iter_mut().for_each(|c| *c = 0);
        for id in ids[..width].iter().flatten() {
            in_window[*id] += 1;
        }
        let mut start = 0;
        loop {
            counts.windows += 1;
            present.clear();
            present.extend((0..n).filter(|&i| in_window[i] > 0));
            for &i in &present {
                counts.single[i] += 1;
                for &j in &present {
                    counts.joint[i * n + j] += 1;
                }
            }
            if start + width >= ids.len() {
                break;
            }
            if let Some(out) = ids[start] {
                in_window[out] -= 1;
            }
            if let Some(inc) = ids[start + width] {
                in_window[inc] += 1;
            }
            start += 1;
        }
    }
    counts
}

fn npmi(counts: &WindowCounts, n: usize, i: usize, j: usize) -> f64 {
    let w = counts.windows as f64;
    let pi = counts.single[i] as f64 / w;
    let pj = counts.single[j] as f64 / w;
    let cij = counts.joint[i * n + j];
    if i == j {
        return 1.0;
    }
    if cij == 0 {
        return -1.0;
    }
    if cij == counts.windows {
        return 1.0;
    }
    let pij = cij as f64 / w + NPMI_EPSILON;
    ((pij / (pi * pj)).ln() / -pij.ln()).clamp(-1.0, 1.0)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>();
    let nb = b.iter().map(|x| x * x).sum::<f64>();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        // one square root keeps identical vectors at exactly 1
        (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
    }
}

pub fn coherence_cv(top_words: &[&str], docs: &[TokenizedDocument], window: usize) -> Result<Coherence> {
    if top_words.len() < 2 {
        return Err(Error::Parameter("coherence needs at least two top words".into()));
    }
    if window < 2 {
        return Err(Error::Parameter("coherence window must be at least 2".into()));
    }
    let n = top_words.len();
    let counts = window_counts(top_words, docs, window);
    let seen = |i: usize| counts.single[i] > 0;
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if seen(i) {
                (0..n).map(|j| npmi(&counts, n, i, j)).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine(&vectors[i], &vectors[j]);
            pairs += 1;
        }
    }
    Ok(Coherence {
        score: total / pairs as f64,
        missing: (0..n).filter(|&i| !seen(i)).map(|i| top_words[i].to_string()).collect(),
    })
}
