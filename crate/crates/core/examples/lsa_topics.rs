//! LSA on one domain: explained-variance curve, knee, and the top-20 topic.

use topiqa::corpus::{load_corpus, FormatConfig, Language};
use topiqa::lsa::{fit_lsa, LsaConfig};
use topiqa::tokenize::{tokenize_nouns, FallbackAnalyzer};

fn main() -> topiqa::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = load_corpus(format!("{dir}/corpus.jsonl"), &FormatConfig::default())?;
    let ko = FallbackAnalyzer::from_file("ko-lexicon", Language::Source, format!("{dir}/lexicon_ko.txt"))?;
    let docs: Vec<_> = corpus
        .domain_pairs("politics")
        .map(|p| tokenize_nouns(&p.source_doc, &ko))
        .collect::<topiqa::Result<_>>()?;

    let fit = fit_lsa("politics", &docs, &LsaConfig { seed: 7, ..Default::default() })?;
    println!("vocabulary after cutoff: {}", fit.vocab.len());
    for (k, (l, c)) in fit.curve.lambdas.iter().zip(&fit.curve.cumulative).take(8).enumerate() {
        println!("  k={:<2} lambda={l:.4} cumulative={c:.4}", k + 1);
    }
    println!("knee at k={}", fit.k_star);
    for e in &fit.topic.entries {
        println!("  {:<8} {:.4}", e.token, e.weight);
    }
    Ok(())
}
