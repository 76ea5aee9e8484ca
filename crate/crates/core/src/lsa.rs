//! Latent semantic analysis over a TF-IDF matrix.
//!
//! The representative topic of a collection is the leading singular axis;
//! its 20 largest absolute term loadings become the topic weights.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::knee::{kneedle, Knee};
use crate::tokenize::TokenizedDocument;
use crate::topic::{ModelKind, TopicRepresentation, WeightSemantics, TOPIC_SIZE};
use crate::vectorize::{build_vocab, cutoff_rank, tfidf_matrix, TfIdfMatrix, VocabIndex};

/// Matrices whose smaller side is at most this use a dense decomposition.
const DENSE_LIMIT: usize = 600;
const OVERSAMPLE: usize = 10;
const POWER_ITERS: usize = 4;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `N_doc x k_max`
    pub u: DMatrix<f64>,
    /// Descending, nonnegative.
    pub sigma: Vec<f64>,
    /// `k_max x |vocab|`
    pub vt: DMatrix<f64>,
    pub k_max: usize,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.vt
    }
}

/// Top `k_max` singular triplets of `m`.
///
/// Small matrices are decomposed densely. Larger ones go through a seeded
/// randomized range finder with power iterations, then a dense SVD of the
/// projected matrix. Each singular pair is sign-normalized so the largest
/// magnitude entry of its `Vt` row is positive.
pub fn truncated_svd(m: &TfIdfMatrix, k_max: usize, seed: u64) -> Result<SvdResult> {
    svd_dense_input(&m.to_dense(), k_max, seed)
}

pub fn svd_dense_input(a: &DMatrix<f64>, k_max: usize, seed: u64) -> Result<SvdResult> {
    let (n, m) = a.shape();
    let rank_bound = n.min(m);
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    if k_max > rank_bound {
        return Err(Error::Parameter(format!(
            "k_max {k_max} exceeds min(rows, cols) = {rank_bound}"
        )));
    }

    let (u, sigma, vt) = if rank_bound <= DENSE_LIMIT || k_max + OVERSAMPLE >= rank_bound {
        dense_svd(a)
    } else {
        randomized_svd(a, k_max + OVERSAMPLE, seed)
    };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));
    order.truncate(k_max);

    let mut u_out = DMatrix::zeros(n, k_max);
    let mut vt_out = DMatrix::zeros(k_max, m);
    let mut s_out = Vec::with_capacity(k_max);
    for (dst, &src) in order.iter().enumerate() {
        let row = vt.row(src);
        let mut pivot = 0;
        for j in 0..m {
            if row[j].abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        vt_out.row_mut(dst).copy_from(&(row * sign));
        u_out.column_mut(dst).copy_from(&(u.column(src) * sign));
        s_out.push(sigma[src].max(0.0));
    }
    Ok(SvdResult {
        u: u_out,
        sigma: s_out,
        vt: vt_out,
        k_max,
    })
}

fn dense_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    (u, svd.singular_values.iter().copied().collect(), vt)
}

fn randomized_svd(a: &DMatrix<f64>, width: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(a.ncols(), width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (a * omega).qr().q();
    for _ in 0..POWER_ITERS {
        let z = (a.transpose() * &q).qr().q();
        q = (a * z).qr().q();
    }
    let b = q.transpose() * a;
    let (ub, s, vt) = dense_svd(&b);
    (q * ub, s, vt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCurve {
    pub lambdas: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl VarianceCurve {
    /// Writes `k,lambda,cumulative` rows, `k` starting at 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,lambda,cumulative")?;
        for (i, (l, c)) in self.lambdas.iter().zip(&self.cumulative).enumerate() {
            writeln!(out, "{},{},{}", i + 1, l, c)?;
        }
        Ok(())
    }
}

/// Explained-variance shares `sigma_i^2 / sum_j sigma_j^2` over the computed
/// singular values, with their running sum.
pub fn variance_curve(svd: &SvdResult) -> Result<VarianceCurve> {
    let total: f64 = svd.sigma.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    let lambdas: Vec<f64> = svd.sigma.iter().map(|s| s * s / total).collect();
    let cumulative = lambdas
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    Ok(VarianceCurve { lambdas, cumulative })
}

/// Topic from the largest-sigma axis among the first `k_star` components.
pub fn lsa_representative_topic(
    svd: &SvdResult,
    vocab: &VocabIndex,
    k_star: usize,
    domain: &str,
) -> Result<TopicRepresentation> {
    if k_star == 0 || k_star > svd.k_max {
        return Err(Error::Parameter(format!(
            "k_star {k_star} outside 1..={}",
            svd.k_max
        )));
    }
    if vocab.len() < TOPIC_SIZE {
        return Err(Error::VocabularyTooSmall {
            size: vocab.len(),
            required: TOPIC_SIZE,
        });
    }
    // sigma is sorted, so the first component carries the largest sigma
    let axis = (0..k_star)
        .max_by(|&a, &b| svd.sigma[a].total_cmp(&svd.sigma[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let scored: Vec<(&str, f64)> = vocab
        .tokens
        .iter()
        .enumerate()
        .map(|(j, t)| (t.as_str(), svd.vt[(axis, j)].abs()))
        .collect();
    TopicRepresentation::from_scores(ModelKind::Lsa, vocab.language, domain, &scored, WeightSemantics::AbsLoading)
}

#[derive(Debug, Clone)]
pub struct LsaConfig {
    /// Components computed for the variance curve (capped by the rank bound).
    pub k_max: usize,
    /// Knee search runs over components `1..=k_select_max`.
    pub k_select_max: usize,
    pub seed: u64,
}

impl Default for LsaConfig {
    fn default() -> Self {
        LsaConfig {
            k_max: 1000,
            k_select_max: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsaFit {
    pub vocab: VocabIndex,
    pub svd: SvdResult,
    pub curve: VarianceCurve,
    pub knee: Option<Knee>,
    pub k_star: usize,
    pub topic: TopicRepresentation,
}

/// Frequency cutoff, TF-IDF, SVD, knee selection, and topic extraction for
/// one domain-language collection.
pub fn fit_lsa(domain: &str, docs: &[TokenizedDocument], cfg: &LsaConfig) -> Result<LsaFit> {
    let full = build_vocab(docs, None)?;
    let vocab = full.truncated(cutoff_rank(&full));
    if vocab.len() < TOPIC_SIZE {
        return Err(Error::VocabularyTooSmall {
            size: vocab.len(),
            required: TOPIC_SIZE,
        });
    }
    let matrix = tfidf_matrix(docs, &vocab);
    let k_max = cfg.k_max.min(matrix.n_rows()).min(vocab.len());
    let svd = truncated_svd(&matrix, k_max, cfg.seed)?;
    let curve = variance_curve(&svd)?;
    let window = cfg.k_select_max.min(k_max);
    let (knee, k_star) = if window >= 3 {
        let knee = kneedle(&curve.cumulative[..window])?;
        let k = knee.k_star;
        (Some(knee), k)
    } else {
        (None, window.max(1))
    };
    let topic = lsa_representative_topic(&svd, &vocab, k_star, domain)?;
    Ok(LsaFit {
        vocab,
        svd,
        curve,
        knee,
        k_star,
        topic,
    })
}
