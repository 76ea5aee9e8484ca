//! LDA with coherence-driven topic-count selection on one domain.

use topiqa::corpus::{load_corpus, FormatConfig, Language};
use topiqa::lda::{fit_lda_selected, LdaConfig};
use topiqa::tokenize::{tokenize_nouns, FallbackAnalyzer};
use topiqa::vectorize::{build_vocab, cutoff_rank};

fn main() -> topiqa::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = load_corpus(format!("{dir}/corpus.jsonl"), &FormatConfig::default())?;
    let en = FallbackAnalyzer::from_file("en-lexicon", Language::Target, format!("{dir}/lexicon_en.txt"))?;
    let docs: Vec<_> = corpus
        .domain_pairs("sports")
        .map(|p| tokenize_nouns(&p.target_doc, &en))
        .collect::<topiqa::Result<_>>()?;
    let full = build_vocab(&docs, None)?;
    let vocab = full.truncated(cutoff_rank(&full));

    let cfg = LdaConfig {
        k_max: 8,
        seed: 7,
        ..Default::default()
    };
    let fit = fit_lda_selected("sports", &docs, &vocab, &cfg)?;
    for (k, cv) in fit.curve.ks.iter().zip(&fit.curve.scores) {
        println!("  k={k:<2} C_v={cv:.4}");
    }
    println!("selected k={}", fit.curve.k_star);
    for t in 0..fit.model.k {
        println!("  topic {t}: {:?}", fit.model.top_words(t, 6));
    }
    println!("representative topic: {:?}", fit.topic.tokens().take(10).collect::<Vec<_>>());
    Ok(())
}
