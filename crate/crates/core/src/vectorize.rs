//! Vocabulary construction, the relative frequency cutoff, and TF-IDF weighting.
//!
//! `idf(t) = ln(N_doc / (1 + df(t)))`. The formula is used as is, so a token
//! present in every document gets a negative weight.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::tokenize::TokenizedDocument;

/// Tokens ordered by descending corpus term frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabIndex {
    pub tokens: Vec<String>,
    pub index: HashMap<String, usize>,
    pub tf: Vec<u64>,
    pub df: Vec<u64>,
    pub n_docs: usize,
    pub language: Language,
}

impl VocabIndex {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Keeps the first `cap` tokens of this ordering.
    pub fn truncated(&self, cap: usize) -> VocabIndex {
        let n = cap.min(self.len());
        let tokens: Vec<String> = self.tokens[..n].to_vec();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        VocabIndex {
            tokens,
            index,
            tf: self.tf[..n].to_vec(),
            df: self.df[..n].to_vec(),
            n_docs: self.n_docs,
            language: self.language,
        }
    }
}

pub fn build_vocab(docs: &[TokenizedDocument], cap: Option<usize>) -> Result<VocabIndex> {
    let first = docs.first().ok_or(Error::EmptyInput("no documents to build a vocabulary from"))?;
    if docs.iter().any(|d| d.language != first.language) {
        return Err(Error::MixedLanguages);
    }
    let mut counts: HashMap<&str, (u64, u64)> = HashMap::new();
    for d in docs {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for t in &d.tokens {
            let e = counts.entry(t.as_str()).or_default();
            e.0 += 1;
            if seen.insert(t.as_str(), ()).is_none() {
                e.1 += 1;
            }
        }
    }
    let mut rows: Vec<(&str, u64, u64)> = counts.into_iter().map(|(t, (tf, df))| (t, tf, df)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(cap) = cap {
        rows.truncate(cap);
    }
    Ok(VocabIndex {
        index: rows.iter().enumerate().map(|(i, r)| (r.0.to_string(), i)).collect(),
        tokens: rows.iter().map(|r| r.0.to_string()).collect(),
        tf: rows.iter().map(|r| r.1).collect(),
        df: rows.iter().map(|r| r.2).collect(),
        n_docs: docs.len(),
        language: first.language,
    })
}

/// Number of leading vocabulary entries with `tf >= 10^(a-2)`, where
/// `a = floor(log10(max tf))`.
pub fn cutoff_rank(vocab: &VocabIndex) -> usize {
    let Some(&max_tf) = vocab.tf.iter().max() else {
        return 0;
    };
    // integer digit count avoids log10 rounding at exact powers of ten
    let a = max_tf.max(1).ilog10() as i32;
    let threshold = 10f64.powi(a - 2);
    vocab.tf.iter().take_while(|&&tf| tf as f64 >= threshold).count()
}

pub fn idf(vocab: &VocabIndex, token: &str) -> Result<f64> {
    let i = vocab.get(token).ok_or_else(|| Error::UnknownToken(token.to_string()))?;
    Ok(idf_at(vocab, i))
}

pub(crate) fn idf_at(vocab: &VocabIndex, i: usize) -> f64 {
    (vocab.n_docs as f64 / (1.0 + vocab.df[i] as f64)).ln()
}

/// Sparse document-by-term matrix in compressed-row form, columns ascending
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfMatrix {
    pub row_ids: Vec<String>,
    pub n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    counts: Vec<u64>,
    values: Vec<f64>,
}

impl TfIdfMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, tf, tfidf)` triples of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, u64, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        span.map(move |k| (self.indices[k], self.counts[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.2)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.n_cols);
        for r in 0..self.n_rows() {
            for (c, _, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Coordinate dump, one `doc_id<TAB>token<TAB>value` line per stored entry.
    pub fn write_coo<W: Write>(&self, vocab: &VocabIndex, mut out: W) -> std::io::Result<()> {
        for r in 0..self.n_rows() {
            for (c, _, v) in self.row(r) {
                writeln!(out, "{}\t{}\t{}", self.row_ids[r], vocab.tokens[c], v)?;
            }
        }
        Ok(())
    }
}

pub fn tfidf_matrix(docs: &[TokenizedDocument], vocab: &VocabIndex) -> TfIdfMatrix {
    let idfs: Vec<f64> = (0..vocab.len()).map(|i| idf_at(vocab, i)).collect();
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut counts = Vec::new();
    let mut values = Vec::new();
    for d in docs {
        let mut row: Vec<(usize, u64)> = Vec::new();
        let mut tf: HashMap<usize, u64> = HashMap::new();
        for t in &d.tokens {
            if let Some(c) = vocab.get(t) {
                *tf.entry(c).or_default() += 1;
            }
        }
        row.extend(tf);
        row.sort_unstable();
        for (c, n) in row {
            indices.push(c);
            counts.push(n);
            values.push(n as f64 * idfs[c]);
        }
        indptr.push(indices.len());
    }
    TfIdfMatrix {
        row_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        n_cols: vocab.len(),
        indptr,
        indices,
        counts,
        values,
    }
}
