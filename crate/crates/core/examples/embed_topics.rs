//! Embedding topics: fallback document vectors, PCA, density clustering and
//! c-TF-IDF over the largest cluster.

use topiqa::corpus::{load_corpus, FormatConfig, Language};
use topiqa::embed::{fit_embed, EmbedConfig};
use topiqa::tokenize::{tokenize_nouns, FallbackAnalyzer};

fn main() -> topiqa::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = load_corpus(format!("{dir}/corpus.jsonl"), &FormatConfig::default())?;
    let ko = FallbackAnalyzer::from_file("ko-lexicon", Language::Source, format!("{dir}/lexicon_ko.txt"))?;
    let docs: Vec<_> = corpus
        .domain_pairs("education")
        .map(|p| tokenize_nouns(&p.source_doc, &ko))
        .collect::<topiqa::Result<_>>()?;

    let cfg = EmbedConfig {
        min_cluster_size: 8,
        seed: 7,
        ..Default::default()
    };
    let fit = fit_embed("education", &docs, None, &cfg)?;
    println!(
        "PCA keeps {:.1}% of variance, distance correlation {:.3}",
        100.0 * fit.retained_variance,
        fit.distance_correlation.unwrap_or(f64::NAN)
    );
    println!("clusters {:?}, noise {}", fit.clusters.sizes, fit.clusters.noise);
    for e in fit.topic.entries.iter().take(10) {
        println!("  {:<8} {:.4}", e.token, e.weight);
    }
    Ok(())
}
