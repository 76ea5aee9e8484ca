//! Embedding-based topics: document vectors are projected onto their
//! leading principal directions, density-clustered with a noise label, and
//! each cluster is described by class-based TF-IDF.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::lda::stream_seed;
use crate::lsa::svd_dense_input;
use crate::tokenize::TokenizedDocument;
use crate::topic::{top_entries, ModelKind, TopicRepresentation, WeightSemantics, TOPIC_SIZE};

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    File,
    FallbackHash,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dim: usize,
    pub ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|x| x == id).map(|i| self.vectors[i].as_slice())
    }

    /// The vectors for `ids`, in that order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<EmbeddingSet> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut vectors = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let i = *index.get(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))?;
            vectors.push(self.vectors[i].clone());
        }
        Ok(EmbeddingSet {
            dim: self.dim,
            ids: ids.iter().map(|s| s.as_ref().to_string()).collect(),
            vectors,
            provenance: self.provenance,
        })
    }

    pub fn write<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dim={}", self.dim)?;
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            let cells: Vec<String> = v.iter().map(f64::to_string).collect();
            writeln!(out, "{id}\t{}", cells.join(" "))?;
        }
        Ok(())
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&raw)
}

/// Parses `dim=<D>` followed by `id<TAB>v1 v2 ... vD` rows. Row numbers in
/// errors count the header as row 1.
pub fn parse_embeddings(raw: &str) -> Result<EmbeddingSet> {
    let mut lines = raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyInput("embedding file is empty"))?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::Format {
            row: 1,
            message: format!("expected `dim=<D>` header, found `{header}`"),
        })?;
    let mut set = EmbeddingSet {
        dim,
        ids: Vec::new(),
        vectors: Vec::new(),
        provenance: Provenance::File,
    };
    let mut seen = HashSet::new();
    for (i, line) in lines {
        let row = i + 1;
        let (id, values) = line.split_once('\t').ok_or_else(|| Error::Format {
            row,
            message: "expected `<id><TAB><values>`".into(),
        })?;
        let vector = values
            .split_whitespace()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Format {
                row,
                message: "values must be finite numbers".into(),
            })?;
        if vector.len() != dim {
            return Err(Error::Format {
                row,
                message: format!("expected {dim} values, found {}", vector.len()),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                line: row,
                id: id.to_string(),
            });
        }
        set.ids.push(id.to_string());
        set.vectors.push(vector);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallbackEmbedding {
    pub vector: Vec<f64>,
    /// True for an empty document, whose vector is all zeros.
    pub degenerate: bool,
}

fn token_direction(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, token));
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Bag-of-tokens embedding: the normalized sum of one pseudo-random unit
/// vector per token occurrence.
pub fn fallback_embed(doc: &TokenizedDocument, dim: usize, seed: u64) -> Result<FallbackEmbedding> {
    if dim < 2 {
        return Err(Error::Parameter(format!("embedding dimension must be at least 2, got {dim}")));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &doc.tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut sum = vec![0.0; dim];
    for (token, n) in counts {
        for (s, x) in sum.iter_mut().zip(token_direction(token, dim, seed)) {
            *s += n as f64 * x;
        }
    }
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        log::warn!("document `{}` has no tokens; using a zero embedding", doc.doc_id);
        return Ok(FallbackEmbedding {
            vector: sum,
            degenerate: true,
        });
    }
    Ok(FallbackEmbedding {
        vector: sum.into_iter().map(|x| x / norm).collect(),
        degenerate: false,
    })
}

pub fn fallback_embedding_set(docs: &[TokenizedDocument], dim: usize, seed: u64) -> Result<EmbeddingSet> {
    let vectors = docs
        .iter()
        .map(|d| fallback_embed(d, dim, seed).map(|e| e.vector))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingSet {
        dim,
        ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        vectors,
        provenance: Provenance::FallbackHash,
    })
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub embeddings: EmbeddingSet,
    /// Share of the centered total variance kept by the projection.
    pub retained_variance: f64,
    /// Pearson correlation between pairwise distances before and after;
    /// `None` when either side has constant distances.
    pub distance_correlation: Option<f64>,
}

/// Projects centered vectors onto their leading `target_dim` principal
/// directions.
pub fn reduce(set: &EmbeddingSet, target_dim: usize, seed: u64) -> Result<Reduction> {
    let n = set.len();
    if target_dim == 0 || target_dim >= set.dim {
        return Err(Error::Parameter(format!(
            "target dimension {target_dim} must lie in 1..{}",
            set.dim
        )));
    }
    if n < target_dim + 1 {
        return Err(Error::Parameter(format!(
            "reducing to {target_dim} dimensions needs at least {} documents, got {n}",
            target_dim + 1
        )));
    }
    let mut x = DMatrix::from_fn(n, set.dim, |r, c| set.vectors[r][c]);
    for c in 0..set.dim {
        let mean = x.column(c).mean();
        x.column_mut(c).add_scalar_mut(-mean);
    }
    let total = x.norm_squared();
    let projected = if total == 0.0 {
        DMatrix::zeros(n, target_dim)
    } else {
        let svd = svd_dense_input(&x, target_dim, seed)?;
        &x * svd.vt.transpose()
    };
    let retained_variance = if total == 0.0 { 0.0 } else { projected.norm_squared() / total };
    let vectors: Vec<Vec<f64>> = (0..n).map(|r| projected.row(r).iter().copied().collect()).collect();
    let distance_correlation = distance_correlation(&set.vectors, &vectors);
    Ok(Reduction {
        embeddings: EmbeddingSet {
            dim: target_dim,
            ids: set.ids.clone(),
            vectors,
            provenance: set.provenance,
        },
        retained_variance,
        distance_correlation,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn distance_correlation(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<f64> {
    // the first 500 points are plenty for a diagnostic
    let n = a.len().min(500);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            xs.push(euclid(&a[i], &a[j]));
            ys.push(euclid(&b[i], &b[j]));
        }
    }
    crate::metrics::pearson(&xs, &ys).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub ids: Vec<String>,
    /// One label per id; `-1` marks noise.
    pub labels: Vec<i32>,
    /// Member count per cluster label, noise excluded.
    pub sizes: BTreeMap<i32, usize>,
    pub noise: usize,
    /// Set when no cluster survived and every point is noise.
    pub all_noise: bool,
}

impl ClusterAssignment {
    pub fn label_of(&self, id: &str) -> Option<i32> {
        self.ids.iter().position(|x| x == id).map(|i| self.labels[i])
    }

    /// Largest cluster, lower label on ties.
    pub fn largest(&self) -> Option<i32> {
        let mut best: Option<(i32, usize)> = None;
        for (&label, &size) in &self.sizes {
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((label, size));
            }
        }
        best.map(|(l, _)| l)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Mutual-reachability single-linkage clustering cut at the largest gap in
/// the minimum spanning tree's edge weights. Components below
/// `min_cluster_size` are noise, and so is everything when fewer than two
/// components reach that size.
pub fn density_cluster(set: &EmbeddingSet, min_cluster_size: usize) -> Result<ClusterAssignment> {
    if min_cluster_size < 2 {
        return Err(Error::Parameter(format!(
            "min_cluster_size must be at least 2, got {min_cluster_size}"
        )));
    }
    let n = set.len();
    let mut labels = vec![NOISE; n];
    let done = |labels: Vec<i32>| {
        let mut sizes = BTreeMap::new();
        for &l in labels.iter().filter(|&&l| l != NOISE) {
            *sizes.entry(l).or_insert(0) += 1;
        }
        let noise = labels.iter().filter(|&&l| l == NOISE).count();
        if sizes.is_empty() {
            log::warn!("density clustering left all {n} points as noise");
        }
        ClusterAssignment {
            ids: set.ids.clone(),
            all_noise: sizes.is_empty(),
            labels,
            sizes,
            noise,
        }
    };
    if n < 2 * min_cluster_size {
        return Ok(done(labels));
    }

    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclid(&set.vectors[i], &set.vectors[j])).collect())
        .collect();
    let core: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut d: Vec<f64> = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| *d).collect();
            d.sort_by(f64::total_cmp);
            d[min_cluster_size - 1]
        })
        .collect();
    let mreach = |i: usize, j: usize| dist[i][j].max(core[i]).max(core[j]);

    // Prim on the dense mutual-reachability graph
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = mreach(cur, j);
                if w < best[j] {
                    best[j] = w;
                    from[j] = cur;
                }
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("a vertex remains outside the tree");
        edges.push((best[next], from[next], next));
        in_tree[next] = true;
        cur = next;
    }

    let mut weights: Vec<f64> = edges.iter().map(|e| e.0).collect();
    weights.sort_by(f64::total_cmp);
    let mut threshold = f64::INFINITY;
    let mut widest = 0.0;
    for w in weights.windows(2) {
        if w[1] - w[0] > widest {
            widest = w[1] - w[0];
            threshold = w[0];
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    for &(w, a, b) in &edges {
        if w <= threshold {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut size = vec![0usize; n];
    for &r in &roots {
        size[r] += 1;
    }
    // label clusters by their first member so labels follow input order
    let mut label_of_root: HashMap<usize, i32> = HashMap::new();
    for (i, &r) in roots.iter().enumerate() {
        if size[r] >= min_cluster_size {
            let next = label_of_root.len() as i32;
            labels[i] = *label_of_root.entry(r).or_insert(next);
        }
    }
    if label_of_root.len() < 2 {
        labels.iter_mut().for_each(|l| *l = NOISE);
    }
    Ok(done(labels))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTerms {
    pub tf: BTreeMap<String, u64>,
    pub total: u64,
}

/// Class-based TF-IDF over clusters. Noise documents count toward `n_docs`
/// and `df` but belong to no cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CTfIdfTable {
    pub n_docs: usize,
    pub df: BTreeMap<String, usize>,
    pub clusters: BTreeMap<i32, ClusterTerms>,
}

impl CTfIdfTable {
    pub fn score(&self, label: i32, token: &str) -> f64 {
        let Some(terms) = self.clusters.get(&label) else {
            return 0.0;
        };
        let (Some(&tf), Some(&df)) = (terms.tf.get(token), self.df.get(token)) else {
            return 0.0;
        };
        tf as f64 / terms.total as f64 * (self.n_docs as f64 / df as f64).ln()
    }

    /// Scores of every token in the cluster, in token order.
    pub fn scores(&self, label: i32) -> Vec<(&str, f64)> {
        self.clusters
            .get(&label)
            .map(|t| t.tf.keys().map(|k| (k.as_str(), self.score(label, k))).collect())
            .unwrap_or_default()
    }
}

pub fn ctfidf(clusters: &ClusterAssignment, docs: &[TokenizedDocument]) -> Result<CTfIdfTable> {
    if clusters.sizes.is_empty() {
        return Err(Error::Degenerate("no non-noise cluster to describe".into()));
    }
    let labels: HashMap<&str, i32> = clusters.ids.iter().map(String::as_str).zip(clusters.labels.iter().copied()).collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut groups: BTreeMap<i32, ClusterTerms> = BTreeMap::new();
    for doc in docs {
        let label = *labels
            .get(doc.doc_id.as_str())
            .ok_or_else(|| Error::Parameter(format!("document `{}` has no cluster label", doc.doc_id)))?;
        let unique: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t.to_string()).or_default() += 1;
        }
        if label == NOISE {
            continue;
        }
        let terms = groups.entry(label).or_insert_with(|| ClusterTerms {
            tf: BTreeMap::new(),
            total: 0,
        });
        for t in &doc.tokens {
            *terms.tf.entry(t.clone()).or_default() += 1;
            terms.total += 1;
        }
    }
    groups.retain(|_, t| t.total > 0);
    Ok(CTfIdfTable {
        n_docs: docs.len(),
        df,
        clusters: groups,
    })
}

/// Top-20 c-TF-IDF tokens of the largest cluster. When that cluster has
/// fewer than 20 distinct tokens the list is filled with zero-weight corpus
/// tokens in lexicographic order.
pub fn embed_representative_topic(
    clusters: &ClusterAssignment,
    table: &CTfIdfTable,
    language: Language,
    domain: &str,
) -> Result<TopicRepresentation> {
    let label = clusters
        .sizes
        .iter()
        .filter(|(l, _)| table.clusters.contains_key(l))
        .fold(None::<(i32, usize)>, |best, (&l, &s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((l, s)),
        })
        .map(|(l, _)| l)
        .ok_or_else(|| Error::Degenerate("all documents are noise".into()))?;
    if table.df.len() < TOPIC_SIZE {
        return Err(Error::VocabularyTooSmall {
            size: table.df.len(),
            required: TOPIC_SIZE,
        });
    }
    let mut scored = table.scores(label);
    debug_assert!(scored.iter().all(|(_, s)| *s >= 0.0), "df never exceeds N");
    for (_, s) in &mut scored {
        *s = s.max(0.0);
    }
    let mut entries = top_entries(&scored, TOPIC_SIZE);
    if entries.len() < TOPIC_SIZE {
        let have: HashSet<String> = entries.iter().map(|e| e.token.clone()).collect();
        let filler: Vec<(&str, f64)> = table
            .df
            .keys()
            .filter(|t| !have.contains(*t))
            .map(|t| (t.as_str(), 0.0))
            .take(TOPIC_SIZE - entries.len())
            .collect();
        entries.extend(top_entries(&filler, filler.len()));
    }
    TopicRepresentation::new(ModelKind::Embed, language, domain, entries, WeightSemantics::CTfIdf)
}

#[derive(Debug, Clone)]
pub struct EmbedConfig {
    /// Dimension of fallback embeddings when no file is supplied.
    pub fallback_dim: usize,
    pub target_dim: usize,
    pub min_cluster_size: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            fallback_dim: 256,
            target_dim: 5,
            min_cluster_size: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbedFit {
    pub provenance: Provenance,
    pub retained_variance: f64,
    pub distance_correlation: Option<f64>,
    pub clusters: ClusterAssignment,
    pub table: CTfIdfTable,
    pub topic: TopicRepresentation,
}

/// Runs reduce, cluster, c-TF-IDF and topic selection for one collection.
/// Vectors come from `embeddings` when given, otherwise from the hashed
/// fallback.
pub fn fit_embed(
    domain: &str,
    docs: &[TokenizedDocument],
    embeddings: Option<&EmbeddingSet>,
    cfg: &EmbedConfig,
) -> Result<EmbedFit> {
    let language = docs.first().ok_or(Error::EmptyInput("no documents to embed"))?.language;
    let set = match embeddings {
        Some(e) => {
            let ids: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
            e.select(&ids)?
        }
        None => fallback_embedding_set(docs, cfg.fallback_dim, cfg.seed)?,
    };
    let reduced = if set.dim > cfg.target_dim {
        reduce(&set, cfg.target_dim, cfg.seed)?
    } else {
        Reduction {
            embeddings: set.clone(),
            retained_variance: 1.0,
            distance_correlation: None,
        }
    };
    let clusters = density_cluster(&reduced.embeddings, cfg.min_cluster_size)?;
    let table = ctfidf(&clusters, docs)?;
    let topic = embed_representative_topic(&clusters, &table, language, domain)?;
    Ok(EmbedFit {
        provenance: set.provenance,
        retained_variance: reduced.retained_variance,
        distance_correlation: reduced.distance_correlation,
        clusters,
        table,
        topic,
    })
}
