//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check compares against an oracle written here.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use topiqa::align::{align, score_pair, BilingualDictionary, DictEntry, MatchKind, VariantRule, VariantTables};
use topiqa::coherence::coherence_cv;
use topiqa::corpus::Language;
use topiqa::embed::{ctfidf, density_cluster, ClusterAssignment, EmbeddingSet, Provenance, NOISE};
use topiqa::knee::kneedle;
use topiqa::lda::fit_lda;
use topiqa::lsa::{svd_dense_input, variance_curve};
use topiqa::metrics::{bleu, correlation_matrix, pearson, qe_losses, BleuConfig, MetricSeries, QeHead, RankTriple, RegressionSample};
use topiqa::tokenize::TokenizedDocument;
use topiqa::topic::{ModelKind, TopicEntry, TopicRepresentation, WeightSemantics};
use topiqa::vectorize::{build_vocab, cutoff_rank};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant, what: &str) -> Outcome {
    let took = start.elapsed();
    ensure!(took < limit, "{what} took {took:.1?}, limit {limit:?}");
    Ok(())
}

fn doc(id: impl Into<String>, tokens: &[&str]) -> TokenizedDocument {
    TokenizedDocument::single_sentence(id, Language::Target, tokens)
}

// ---------------------------------------------------------------- BLEU

/// Clipped precision by explicit enumeration of n-gram positions.
fn oracle_precision(h: &[&str], refs: &[Vec<&str>], n: usize) -> (usize, usize) {
    if h.len() < n {
        return (0, 0);
    }
    let total = h.len() - n + 1;
    let count = |s: &[&str], g: &[&str]| s.windows(n).filter(|w| *w == g).count();
    let mut matched = 0;
    let mut seen: Vec<&[&str]> = Vec::new();
    for g in h.windows(n) {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let max_ref = refs.iter().map(|r| count(r, g)).max().unwrap_or(0);
        matched += count(h, g).min(max_ref);
    }
    (matched, total)
}

fn oracle_bleu(h: &[&str], refs: &[Vec<&str>]) -> (Vec<f64>, f64, f64) {
    let p: Vec<f64> = (1..=4)
        .map(|n| {
            let (m, t) = oracle_precision(h, refs, n);
            if t == 0 { 0.0 } else { m as f64 / t as f64 }
        })
        .collect();
    let hl = h.len();
    let mut r = refs[0].len();
    for rf in refs {
        let (d, best) = (rf.len().abs_diff(hl), r.abs_diff(hl));
        if d < best || (d == best && rf.len() < r) {
            r = rf.len();
        }
    }
    let bp = if hl > r { 1.0 } else { (1.0 - r as f64 / hl as f64).exp() };
    let score = if p.contains(&0.0) {
        0.0
    } else {
        bp * p.iter().map(|x| 0.25 * x.ln()).sum::<f64>().exp()
    };
    (p, bp, score)
}

fn compare_bleu(h: &[&str], refs: &[Vec<&str>], cfg: &BleuConfig) -> Outcome {
    let b = bleu(h, refs, cfg).map_err(|e| e.to_string())?;
    let (p, bp, score) = oracle_bleu(h, refs);
    ensure!(b.precisions == p, "{h:?} vs {refs:?}: precisions {:?} != {p:?}", b.precisions);
    ensure!((b.brevity_penalty - bp).abs() <= 1e-12, "{h:?} vs {refs:?}: BP {} != {bp}", b.brevity_penalty);
    ensure!((b.score - score).abs() <= 1e-12, "{h:?} vs {refs:?}: score {} != {score}", b.score);
    Ok(())
}

const ALPHABET: [&str; 3] = ["a", "b", "c"];

fn all_strings(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| ALPHABET.iter().map(move |a| [s.as_slice(), &[*a]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn criterion_bleu_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = BleuConfig::default();
    let strings = all_strings(6);
    strings.par_iter().try_for_each(|h| {
        strings.iter().try_for_each(|r| compare_bleu(h, std::slice::from_ref(r), &cfg))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let word = |rng: &mut ChaCha8Rng, lo: usize| -> Vec<&str> {
        let len = rng.random_range(lo..=12);
        (0..len).map(|_| ALPHABET[rng.random_range(0..3)]).collect()
    };
    for _ in 0..1000 {
        let h = word(&mut rng, 7);
        let refs: Vec<Vec<&str>> = (0..rng.random_range(1..=3)).map(|_| word(&mut rng, 1)).collect();
        compare_bleu(&h, &refs, &cfg)?;
    }
    within(Duration::from_secs(10), start, "BLEU oracle suite")
}

fn criterion_bleu_identity() -> Outcome {
    let cfg = BleuConfig::default();
    for s in ["a b c d", "the cat is on the mat", "a a a a a a a a"] {
        let t: Vec<&str> = s.split(' ').collect();
        let b = bleu(&t, std::slice::from_ref(&t), &cfg).map_err(|e| e.to_string())?;
        ensure!(b.score == 1.0, "identity `{s}` scored {}", b.score);
    }
    let unigram = BleuConfig::uniform(1).map_err(|e| e.to_string())?;
    let b = bleu(&["the", "the", "the", "the"], &[vec!["the", "cat"]], &unigram).map_err(|e| e.to_string())?;
    ensure!(b.precisions == [0.25], "p1 = {:?}", b.precisions);
    ensure!(b.brevity_penalty == 1.0 && b.score == 0.25, "BP {} score {}", b.brevity_penalty, b.score);
    Ok(())
}

// ---------------------------------------------------------------- LSA

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng))
}

fn criterion_svd_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let (rows, cols) = (rng.random_range(1..=24), rng.random_range(1..=16));
        let a = gaussian_matrix(&mut rng, rows, cols);
        let k = rows.min(cols);
        let svd = svd_dense_input(&a, k, case).map_err(|e| e.to_string())?;
        let eig = SymmetricEigen::new(a.transpose() * &a);
        let mut oracle: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
        oracle.sort_by(|x, y| y.total_cmp(x));
        for (i, (s, o)) in svd.sigma.iter().zip(&oracle).enumerate() {
            ensure!((s - o).abs() <= 1e-6 * o, "case {case} ({rows}x{cols}) sigma_{i}: {s} vs oracle {o}");
        }
        let err = (svd.reconstruct() - &a).norm();
        ensure!(err <= 1e-6, "case {case}: reconstruction error {err}");
    }
    within(Duration::from_secs(30), start, "SVD oracle")
}

fn brute_force_knee(values: &[f64]) -> usize {
    let n = values.len();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = values.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let d: Vec<f64> = (0..n).map(|i| f[i] - (f[0] + (f[n - 1] - f[0]) * i as f64 / (n - 1) as f64)).collect();
    let mut best = 0;
    for i in 1..n {
        if d[i] > d[best] {
            best = i;
        }
    }
    best + 1
}

fn criterion_variance_and_knee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..50 {
        let (rows, cols) = (rng.random_range(2..=24), rng.random_range(2..=16));
        let a = gaussian_matrix(&mut rng, rows, cols);
        let svd = svd_dense_input(&a, rows.min(cols), case).map_err(|e| e.to_string())?;
        let curve = variance_curve(&svd).map_err(|e| e.to_string())?;
        let sum: f64 = curve.lambdas.iter().sum();
        ensure!((sum - 1.0).abs() <= 1e-9, "case {case}: lambdas sum to {sum}");
    }
    for case in 0..100 {
        let n = rng.random_range(5..=40);
        let mut inc: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        inc.sort_by(|x, y| y.total_cmp(x));
        let curve: Vec<f64> = inc
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let knee = kneedle(&curve).map_err(|e| e.to_string())?;
        let expected = brute_force_knee(&curve);
        ensure!(knee.k_star == expected, "curve {case}: kneedle {} vs brute force {expected}", knee.k_star);
    }
    Ok(())
}

fn criterion_cutoff() -> Outcome {
    // max tf 1500 gives a = 3 and a threshold of 10
    let freqs = [("w0", 1500), ("w1", 230), ("w2", 41), ("w3", 10), ("w4", 10), ("w5", 9), ("w6", 2), ("w7", 1)];
    let docs: Vec<TokenizedDocument> = freqs
        .iter()
        .map(|(w, tf)| doc(*w, &vec![*w; *tf]))
        .collect();
    let vocab = build_vocab(&docs, None).map_err(|e| e.to_string())?;
    let kept = cutoff_rank(&vocab);
    let expected: Vec<&str> = freqs.iter().filter(|(_, tf)| *tf >= 10).map(|(w, _)| *w).collect();
    ensure!(
        vocab.tokens[..kept] == expected,
        "kept {:?}, expected {expected:?}",
        &vocab.tokens[..kept]
    );
    Ok(())
}

// ---------------------------------------------------------------- LDA

fn two_vocab_corpus(rng: &mut ChaCha8Rng) -> Vec<TokenizedDocument> {
    let a: Vec<String> = (0..8).map(|i| format!("apple{i}")).collect();
    let b: Vec<String> = (0..8).map(|i| format!("brick{i}")).collect();
    (0..20)
        .map(|d| {
            let words = if d % 2 == 0 { &a } else { &b };
            let tokens: Vec<&str> = (0..30).map(|_| words[rng.random_range(0..8)].as_str()).collect();
            doc(format!("d{d:02}"), &tokens)
        })
        .collect()
}

fn criterion_lda() -> Outcome {
    let start = Instant::now();
    let mut separated = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let docs = two_vocab_corpus(&mut rng);
        let vocab = build_vocab(&docs, None).map_err(|e| e.to_string())?;
        let m = fit_lda(&docs, &vocab, 2, seed, 200).map_err(|e| e.to_string())?;
        for row in m.phi.iter().chain(&m.theta) {
            let s: f64 = row.iter().sum();
            ensure!((s - 1.0).abs() <= 1e-9, "seed {seed}: row sums to {s}");
        }
        let mass = |t: usize, prefix: &str| -> f64 {
            m.vocab.iter().zip(&m.phi[t]).filter(|(w, _)| w.starts_with(prefix)).map(|(_, p)| p).sum()
        };
        let (t_apple, t_brick) = if mass(0, "apple") > mass(1, "apple") { (0, 1) } else { (1, 0) };
        let topics_split = mass(t_apple, "apple") > 0.9 && mass(t_brick, "brick") > 0.9;
        let docs_split = m.doc_ids.iter().zip(&m.theta).all(|(id, th)| {
            let even = id[1..].parse::<usize>().unwrap_or(1) % 2 == 0;
            let t = if even { t_apple } else { t_brick };
            th[t] > 0.5
        });
        if topics_split && docs_split {
            separated += 1;
        }
    }
    ensure!(separated >= 95, "separated in {separated} of 100 runs");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let docs = two_vocab_corpus(&mut rng);
    let vocab = build_vocab(&docs, None).map_err(|e| e.to_string())?;
    let bits = |m: &topiqa::lda::LdaModel| -> Vec<u64> {
        m.phi.iter().chain(&m.theta).flatten().map(|x| x.to_bits()).collect()
    };
    let a = fit_lda(&docs, &vocab, 3, 99, 200).map_err(|e| e.to_string())?;
    let b = fit_lda(&docs, &vocab, 3, 99, 200).map_err(|e| e.to_string())?;
    ensure!(bits(&a) == bits(&b) && a.assignments == b.assignments, "same seed gave different output");
    within(Duration::from_secs(60), start, "LDA checks")
}

// ---------------------------------------------------------------- C_v

/// C_v by listing every window as an explicit token set.
fn oracle_cv(top: &[&str], docs: &[Vec<&str>], window: usize) -> f64 {
    let mut windows: Vec<HashSet<&str>> = Vec::new();
    for d in docs {
        if d.is_empty() {
            continue;
        }
        if d.len() <= window {
            windows.push(d.iter().copied().collect());
        } else {
            for s in 0..=d.len() - window {
                windows.push(d[s..s + window].iter().copied().collect());
            }
        }
    }
    let w = windows.len() as f64;
    let count = |ws: &[&str]| windows.iter().filter(|set| ws.iter().all(|x| set.contains(x))).count();
    let n = top.len();
    let npmi = |i: usize, j: usize| -> f64 {
        if i == j {
            return 1.0;
        }
        let cij = count(&[top[i], top[j]]);
        if cij == 0 {
            return -1.0;
        }
        if cij == windows.len() {
            return 1.0;
        }
        let (pi, pj) = (count(&[top[i]]) as f64 / w, count(&[top[j]]) as f64 / w);
        let pij = cij as f64 / w + 1e-12;
        ((pij / (pi * pj)).ln() / -pij.ln()).clamp(-1.0, 1.0)
    };
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|i| if count(&[top[i]]) == 0 { vec![0.0; n] } else { (0..n).map(|j| npmi(i, j)).collect() })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&vectors[i], &vectors[j]);
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            total += if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
        }
    }
    total / (n * (n - 1) / 2) as f64
}

fn criterion_coherence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphabet = ["p", "q", "r", "s", "t", "u", "v"];
    for case in 0..300 {
        let n_docs = rng.random_range(1..=3);
        let mut budget = rng.random_range(2..=50usize);
        let mut raw: Vec<Vec<&str>> = Vec::new();
        for d in 0..n_docs {
            let len = if d + 1 == n_docs { budget } else { rng.random_range(1..=budget.max(1)) };
            budget = budget.saturating_sub(len);
            raw.push((0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect());
        }
        let mut pool = alphabet.to_vec();
        pool.push("unseen");
        pool.shuffle(&mut rng);
        let top: Vec<&str> = pool[..rng.random_range(2..=6)].to_vec();
        let window = rng.random_range(2..=12);
        let docs: Vec<TokenizedDocument> = raw.iter().enumerate().map(|(i, d)| doc(format!("d{i}"), d)).collect();
        let got = coherence_cv(&top, &docs, window).map_err(|e| e.to_string())?.score;
        let want = oracle_cv(&top, &raw, window);
        ensure!((got - want).abs() <= 1e-9, "case {case}: C_v {got} vs oracle {want}");
    }
    let docs = [doc("x", &["a", "b"]), doc("y", &["b", "a", "b"])];
    let score = coherence_cv(&["a", "b"], &docs, 10).map_err(|e| e.to_string())?.score;
    ensure!(score == 1.0, "always-together pair scored {score}");
    Ok(())
}

// ---------------------------------------------------------------- embedding topics

fn criterion_ctfidf() -> Outcome {
    // cluster 0 holds docs a and b: ten tokens, two of them `u`, and `u`
    // occurs in no other document, so df = 2 with N = 8
    let docs = vec![
        doc("a", &["t", "u", "v", "w", "x"]),
        doc("b", &["u", "v", "w", "x", "y"]),
        doc("c", &["z"]),
        doc("d", &["z"]),
        doc("e", &["z"]),
        doc("f", &["z"]),
        doc("g", &["z"]),
        doc("h", &["t"]),
    ];
    let clusters = ClusterAssignment {
        ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        labels: vec![0, 0, 1, 1, 1, 1, 1, NOISE],
        sizes: BTreeMap::from([(0, 2), (1, 5)]),
        noise: 1,
        all_noise: false,
    };
    let table = ctfidf(&clusters, &docs).map_err(|e| e.to_string())?;
    let u = table.score(0, "u");
    ensure!((u - 0.2 * 4f64.ln()).abs() <= 1e-12, "score(u) = {u}");

    let docs = vec![doc("a", &["k", "x"]), doc("b", &["k", "y"]), doc("c", &["k"])];
    let clusters = ClusterAssignment {
        ids: vec!["a".into(), "b".into(), "c".into()],
        labels: vec![0, 1, 1],
        sizes: BTreeMap::from([(0, 1), (1, 2)]),
        noise: 0,
        all_noise: false,
    };
    let table = ctfidf(&clusters, &docs).map_err(|e| e.to_string())?;
    for label in [0, 1] {
        let k = table.score(label, "k");
        ensure!(k == 0.0, "token in every document scored {k} in cluster {label}");
    }
    Ok(())
}

fn point_set(vectors: Vec<Vec<f64>>) -> EmbeddingSet {
    EmbeddingSet {
        dim: vectors[0].len(),
        ids: (0..vectors.len()).map(|i| format!("p{i:03}")).collect(),
        vectors,
        provenance: Provenance::File,
    }
}

fn criterion_clustering() -> Outcome {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        for centre in [[0.0, 0.0], [12.0, 12.0]] {
            for _ in 0..20 {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                points.push(vec![centre[0] + dx, centre[1] + dy]);
            }
        }
        let c = density_cluster(&point_set(points), 5).map_err(|e| e.to_string())?;
        ensure!(c.sizes.len() == 2, "seed {seed}: {} clusters", c.sizes.len());
        ensure!(c.noise * 10 <= c.labels.len(), "seed {seed}: {} of 40 points are noise", c.noise);
        let first: HashSet<i32> = c.labels[..20].iter().copied().filter(|l| *l != NOISE).collect();
        let second: HashSet<i32> = c.labels[20..].iter().copied().filter(|l| *l != NOISE).collect();
        ensure!(first.len() == 1 && second.len() == 1 && first != second, "seed {seed}: blobs mixed");
    }
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let points: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let c = density_cluster(&point_set(points), 40).map_err(|e| e.to_string())?;
        ensure!(c.all_noise && c.noise == 200, "uniform seed {seed}: clusters {:?}", c.sizes);
    }
    Ok(())
}

// ---------------------------------------------------------------- alignment

fn topic(language: Language, tokens: &[String], weights: &[f64]) -> Result<TopicRepresentation, String> {
    let entries = tokens.iter().zip(weights).map(|(t, w)| TopicEntry { token: t.clone(), weight: *w }).collect();
    TopicRepresentation::new(ModelKind::Lda, language, "d", entries, WeightSemantics::WordProbability).map_err(|e| e.to_string())
}

fn descending(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..20).map(|_| rng.random_range(0.001..1.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

fn filler(prefix: &str) -> Vec<String> {
    (0..20).map(|i| format!("{prefix}{i:02}")).collect()
}

fn entry(candidates: &[&str], proper_noun: bool) -> DictEntry {
    DictEntry {
        candidates: candidates.iter().map(|c| c.to_string()).collect(),
        proper_noun,
    }
}

fn criterion_alignment() -> Outcome {
    let mut tables = VariantTables::default();
    tables.add_aliases("Seoul National University\tSNU\nCheong Wa Dae\tBlue House\n").map_err(|e| e.to_string())?;
    tables.add_romanization("eo\tu\n").map_err(|e| e.to_string())?;
    let mut dict = BilingualDictionary::default().with_variants(tables);
    let cases = [
        ("김연아", "Kim Yeona", "Kim_Yuna", VariantRule::Romanization),
        ("서울대", "Seoul National University", "SNU", VariantRule::Alias),
        ("코로나19", "COVID-19", "COVID19", VariantRule::Format),
        ("청와대", "Cheong Wa Dae", "Blue_House", VariantRule::Alias),
    ];
    let mut src = filler("k");
    let mut tgt = filler("e");
    for (i, (ko, spelled, target, _)) in cases.iter().enumerate() {
        dict.insert(*ko, entry(&[spelled], true));
        src[i] = ko.to_string();
        tgt[19 - i] = target.to_string();
    }
    let weights: Vec<f64> = (0..20).map(|i| 1.0 - 0.04 * i as f64).collect();
    let a = align(&topic(Language::Source, &src, &weights)?, &topic(Language::Target, &tgt, &weights)?, &dict).map_err(|e| e.to_string())?;
    for (i, (ko, _, target, rule)) in cases.iter().enumerate() {
        let p = a.pairs.iter().find(|p| p.source_index == i).ok_or(format!("{ko} unmatched"))?;
        ensure!(
            p.target_index == 19 - i && p.match_kind == MatchKind::ProperNounVariant && p.rule == Some(*rule),
            "{ko} -> {target}: got {p:?}"
        );
    }

    // two source tokens translate to the same target token
    let mut src = filler("k");
    let mut tgt = filler("e");
    src[2] = "은행".into();
    src[5] = "둑".into();
    tgt[7] = "bank".into();
    let mut d = BilingualDictionary::default();
    d.insert("은행", entry(&["bank"], false));
    d.insert("둑", entry(&["bank"], false));
    let a = align(&topic(Language::Source, &src, &weights)?, &topic(Language::Target, &tgt, &weights)?, &d).map_err(|e| e.to_string())?;
    ensure!(a.pairs.len() == 1 && a.pairs[0].source_index == 2 && a.pairs[0].target_index == 7, "conflict: {:?}", a.pairs);
    ensure!(a.unmatched_source.contains(&5), "losing source token is not reported unmatched");

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..1000 {
        let (src, tgt, dict) = random_fixture(&mut rng);
        let s = topic(Language::Source, &src, &descending(&mut rng))?;
        let t = topic(Language::Target, &tgt, &descending(&mut rng))?;
        let a = align(&s, &t, &dict).map_err(|e| e.to_string())?;
        let mut used_s = HashSet::new();
        let mut used_t = HashSet::new();
        for p in &a.pairs {
            ensure!(used_s.insert(p.source_index), "case {case}: source {} aligned twice", p.source_index);
            ensure!(used_t.insert(p.target_index), "case {case}: target {} aligned twice", p.target_index);
            if p.match_kind == MatchKind::Exact {
                let cands = &dict.get(&src[p.source_index]).ok_or("aligned token missing from dictionary")?.candidates;
                let key = tgt[p.target_index].to_lowercase().replace('_', " ");
                ensure!(cands.iter().any(|c| c.to_lowercase() == key), "case {case}: bad exact pair {p:?}");
            }
        }
        ensure!(a.pairs.len() + a.unmatched_source.len() == 20, "case {case}: source accounting");
        ensure!(a.pairs.len() + a.unmatched_target.len() == 20, "case {case}: target accounting");
    }
    Ok(())
}

/// Source and target top-20 lists over a small shared pool, with a random
/// dictionary that often maps several sources onto one target.
fn random_fixture(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>, BilingualDictionary) {
    let mut ko: Vec<String> = (0..30).map(|i| format!("단어{i}")).collect();
    let mut en: Vec<String> = (0..30).map(|i| format!("word{i}")).collect();
    ko.shuffle(rng);
    en.shuffle(rng);
    let mut dict = BilingualDictionary::default();
    for k in &ko {
        if rng.random_bool(0.7) {
            let n = rng.random_range(1..=3);
            let cands: Vec<&str> = (0..n).map(|_| en[rng.random_range(0..12)].as_str()).collect();
            let mut uniq: Vec<&str> = Vec::new();
            for c in cands {
                if !uniq.contains(&c) {
                    uniq.push(c);
                }
            }
            dict.insert(k, entry(&uniq, false));
        }
    }
    (ko[..20].to_vec(), en[..20].to_vec(), dict)
}

fn criterion_cosine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let weights = descending(&mut rng);
    let src: Vec<String> = (0..20).map(|i| format!("원{i}")).collect();
    let tgt: Vec<String> = (0..20).map(|i| format!("orig{i}")).collect();
    let mut dict = BilingualDictionary::default();
    for (k, e) in src.iter().zip(&tgt) {
        dict.insert(k, entry(&[e], false));
    }
    let s = topic(Language::Source, &src, &weights)?;
    let t = topic(Language::Target, &tgt, &weights)?;
    let perfect = score_pair("d", ModelKind::Lda, &s, &t, &dict).map_err(|e| e.to_string())?;
    ensure!(perfect.similarity == 1.0, "perfect fixture scored {}", perfect.similarity);

    // sources only reach target slots whose weight is zero
    let mut alpha = weights.clone();
    alpha[10..].iter_mut().for_each(|w| *w = 0.0);
    let mut dict = BilingualDictionary::default();
    for i in 0..10 {
        dict.insert(&src[i], entry(&[&tgt[10 + i]], false));
    }
    let t = topic(Language::Target, &tgt, &alpha)?;
    let disjoint = score_pair("d", ModelKind::Lda, &s, &t, &dict).map_err(|e| e.to_string())?;
    ensure!(disjoint.similarity == 0.0 && !disjoint.no_match, "disjoint support: {} no_match={}", disjoint.similarity, disjoint.no_match);

    let none = score_pair("d", ModelKind::Lda, &s, &t, &BilingualDictionary::default()).map_err(|e| e.to_string())?;
    ensure!(none.similarity == 0.0 && none.no_match, "zero-match pair: {} no_match={}", none.similarity, none.no_match);

    for case in 0..1000 {
        let (src, tgt, dict) = random_fixture(&mut rng);
        let s = topic(Language::Source, &src, &descending(&mut rng))?;
        let t = topic(Language::Target, &tgt, &descending(&mut rng))?;
        let sc = score_pair("d", ModelKind::Lda, &s, &t, &dict).map_err(|e| e.to_string())?;
        // rebuild the cosine from the evidence rows and the target weights
        let mut beta = [0.0; 20];
        for e in &sc.evidence {
            beta[e.target_rank - 1] = e.source_weight;
        }
        let alpha: Vec<f64> = t.entries.iter().map(|e| e.weight).collect();
        let dot: f64 = beta.iter().zip(&alpha).map(|(b, a)| b * a).sum();
        let nb: f64 = beta.iter().map(|b| b * b).sum();
        let na: f64 = alpha.iter().map(|a| a * a).sum();
        let want = if nb == 0.0 { 0.0 } else { dot / (nb.sqrt() * na.sqrt()) };
        ensure!((sc.similarity - want).abs() <= 1e-12, "case {case}: {} vs evidence {want}", sc.similarity);
        ensure!((sc.recompute_from_evidence() - sc.similarity).abs() <= 1e-12, "case {case}: stored recompute differs");
        ensure!(sc.no_match == sc.evidence.is_empty(), "case {case}: no_match flag");
    }
    Ok(())
}

// ---------------------------------------------------------------- QE head

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn criterion_qe() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-5;
    for case in 0..50u64 {
        let dim = rng.random_range(1..=5);
        let hidden = rng.random_range(1..=6);
        let mut head = QeHead::new(dim, hidden, rng.random_range(0.05..0.5), case).map_err(|e| e.to_string())?;
        let mut params = head.params();
        params.iter_mut().for_each(|p| *p += rng.random_range(-0.1..0.1));
        head.set_params(&params).map_err(|e| e.to_string())?;
        let vecs: Vec<Vec<f64>> = (0..12).map(|_| random_vec(&mut rng, dim)).collect();
        let regression: Vec<RegressionSample> = (0..4)
            .map(|i| RegressionSample { src: &vecs[i], hyp: &vecs[i + 4], target: rng.random() })
            .collect();
        let ranking: Vec<RankTriple> = (0..4).map(|i| RankTriple { src: &vecs[i], better: &vecs[i + 4], worse: &vecs[i + 8] }).collect();

        let analytic = qe_losses(&head, &regression, &ranking).map_err(|e| e.to_string())?.gradients.flat();
        let loss = |p: &[f64]| -> Result<f64, String> {
            let mut hh = head.clone();
            hh.set_params(p).map_err(|e| e.to_string())?;
            let l = qe_losses(&hh, &regression, &ranking).map_err(|e| e.to_string())?;
            Ok(l.mse + l.rank)
        };
        for i in 0..params.len() {
            let mut up = params.clone();
            let mut down = params.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (loss(&up)? - loss(&down)?) / (2.0 * h);
            let g = analytic[i];
            let scale = g.abs().max(fd.abs()).max(1e-6);
            ensure!((g - fd).abs() <= 1e-4 * scale, "head {case}, param {i}: analytic {g} vs numeric {fd}");
        }
    }

    // satisfied margins contribute nothing
    let mut satisfied = 0;
    for case in 0..200u64 {
        let dim = 3;
        let head = QeHead::new(dim, 4, 0.1, case).map_err(|e| e.to_string())?;
        let (s, a, b) = (random_vec(&mut rng, dim), random_vec(&mut rng, dim), random_vec(&mut rng, dim));
        let score = |x: &[f64]| -> Result<f64, String> {
            let f = topiqa::metrics::qe_features(&s, x).map_err(|e| e.to_string())?;
            topiqa::metrics::qe_score(&head, &f).map_err(|e| e.to_string())
        };
        let (sa, sb) = (score(&a)?, score(&b)?);
        let (better, worse) = if sa >= sb { (&a, &b) } else { (&b, &a) };
        if (sa - sb).abs() < head.margin {
            continue;
        }
        satisfied += 1;
        let l = qe_losses(&head, &[], &[RankTriple { src: &s, better, worse }]).map_err(|e| e.to_string())?;
        ensure!(l.rank == 0.0, "case {case}: satisfied margin gave hinge {}", l.rank);
        ensure!(l.gradients.flat().iter().all(|g| *g == 0.0), "case {case}: satisfied margin gave a gradient");
    }
    ensure!(satisfied >= 50, "only {satisfied} satisfied triples generated");
    Ok(())
}

// ---------------------------------------------------------------- end to end

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run_evaluate(config: &str, out: &Path) -> Outcome {
    let status = Command::new(env!("CARGO_BIN_EXE_topiqa"))
        .args(["evaluate", "--config"])
        .arg(fixtures().join(config))
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.code() == Some(0), "evaluate {config} exited with {status}");
    Ok(())
}

fn tree(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = fs::read(&p).map_err(|e| e.to_string())?;
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

fn summary(dir: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>, String> {
    let raw = fs::read_to_string(dir.join("summary.csv")).map_err(|e| e.to_string())?;
    let (_, rows) = topiqa::report::read_summary(&raw).map_err(|e| e.to_string())?;
    Ok(rows.into_iter().map(|r| (r.domain, r.values)).collect())
}

fn criterion_end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b, s) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("shuffled"));
    let start = Instant::now();
    run_evaluate("evaluate.toml", &a)?;
    within(Duration::from_secs(120), start, "evaluate")?;
    run_evaluate("evaluate.toml", &b)?;
    let (ta, tb) = (tree(&a)?, tree(&b)?);
    ensure!(!ta.is_empty() && ta.keys().any(|k| k.starts_with("reports")), "no reports written");
    for (path, bytes) in &ta {
        ensure!(tb.get(path) == Some(bytes), "{} differs between reruns", path.display());
    }
    ensure!(ta.len() == tb.len(), "reruns wrote different file sets");

    run_evaluate("evaluate_shuffled.toml", &s)?;
    let (faithful, shuffled) = (summary(&a)?, summary(&s)?);
    ensure!(faithful.len() == 3, "expected 3 domains, got {}", faithful.len());
    for (domain, f) in &faithful {
        let sh = shuffled.get(domain).ok_or(format!("{domain} missing from shuffled run"))?;
        for model in ["lsa", "lda", "embed"] {
            let (x, y) = (f.get(model), sh.get(model));
            ensure!(
                matches!((x, y), (Some(x), Some(y)) if y < x),
                "{domain}/{model}: shuffled {y:?} is not below faithful {x:?}"
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- Pearson

fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sa * sb)
}

fn criterion_pearson() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..500 {
        let n = rng.random_range(3..=40);
        let a = random_vec(&mut rng, n);
        let b: Vec<f64> = a.iter().map(|x| rng.random_range(-1.0..1.0) * 0.5 + x * rng.random_range(-1.0..1.0)).collect();
        let r = pearson(&a, &b).map_err(|e| e.to_string())?;
        let want = oracle_pearson(&a, &b);
        ensure!((r - want).abs() <= 1e-12, "case {case}: {r} vs oracle {want}");

        let (scale, shift) = (rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }, rng.random_range(-50.0..50.0));
        let moved: Vec<f64> = a.iter().map(|x| scale * x + shift).collect();
        let r2 = pearson(&moved, &b).map_err(|e| e.to_string())?;
        ensure!((r2 - scale.signum() * r).abs() <= 1e-12, "case {case}: affine map changed r from {r} to {r2}");
    }

    let domains: Vec<String> = (0..6).map(|i| format!("dom{i}")).collect();
    let mut series: Vec<MetricSeries> = ["lsa", "lda", "embed", "bleu"]
        .iter()
        .map(|name| {
            let mut s = MetricSeries::new(*name);
            s.values = domains.iter().map(|d| (d.clone(), rng.random::<f64>())).collect();
            s
        })
        .collect();
    let mut flat = MetricSeries::new("flat");
    flat.values = domains.iter().map(|d| (d.clone(), 0.5)).collect();
    series.push(flat);
    let m = correlation_matrix(&series);
    for (i, row) in m.iter().enumerate() {
        ensure!(row[i] == Some(1.0), "diagonal cell {i} is {:?}", row[i]);
        for (j, cell) in row.iter().enumerate() {
            ensure!(*cell == m[j][i], "matrix is not symmetric at ({i}, {j})");
        }
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("BLEU matches a brute-force clipped n-gram oracle", criterion_bleu_oracle),
        ("identity BLEU is 1 and repeated-word clipping gives p1 = 0.25", criterion_bleu_identity),
        ("truncated SVD matches an eigen oracle and reconstructs", criterion_svd_oracle),
        ("explained variance sums to 1 and kneedle matches brute force", criterion_variance_and_knee),
        ("frequency cutoff keeps tf >= 10 when a = 3", criterion_cutoff),
        ("LDA rows are stochastic, topics separate, output is reproducible", criterion_lda),
        ("C_v matches window enumeration; co-occurring pair scores 1", criterion_coherence),
        ("c-TF-IDF hand case and ubiquitous token", criterion_ctfidf),
        ("density clustering recovers blobs and rejects uniform noise", criterion_clustering),
        ("alignment variants, conflicts and one-to-one invariant", criterion_alignment),
        ("cosine scoring fixtures and evidence recomputation", criterion_cosine),
        ("QE head gradients and hinge behaviour", criterion_qe),
        ("end-to-end evaluate: timing, determinism, shuffled corpus", criterion_end_to_end),
        ("Pearson oracle, unit diagonal, affine invariance", criterion_pearson),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match result {
            Ok(()) => println!("PASS {:>2} {name} ({took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
